#pragma once

#include <string>
#include <vector>

namespace linerec {

// Label id -> character mapping. The CTC blank is not part of the alphabet;
// decoders use id == size() for blank.
class Alphabet {
public:
    Alphabet() = default;

    // Each Unicode scalar value in s becomes one class, in order.
    // Throws InputError on duplicates or empty input.
    static Alphabet from_utf8(const std::string& s);

    int size() const { return static_cast<int>(chars_.size()); }
    char32_t character(int id) const { return chars_[static_cast<size_t>(id)]; }
    // -1 when the character is not in the alphabet.
    int id_of(char32_t c) const;

    std::u32string labels_to_text(const std::vector<int>& labels) const;
    std::string labels_to_utf8(const std::vector<int>& labels) const;
    std::string to_utf8() const;

    const std::vector<char32_t>& chars() const { return chars_; }

private:
    std::vector<char32_t> chars_;
};

}  // namespace linerec
