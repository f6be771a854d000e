#include "linerec/char_lm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "linerec/errors.hpp"
#include "linerec/utf8.hpp"

namespace linerec {

namespace {

constexpr char kMagic[4] = {'T', 'L', 'L', 'M'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw FormatError("lm file: truncated");
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

void write_str(std::ostream& os, const std::string& s) {
    write_le<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& is) {
    uint32_t n = read_le<uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw FormatError("lm file: truncated string");
    return s;
}

}  // namespace

size_t CharNGramLM::U32Hash::operator()(const std::u32string& s) const {
    // FNV-1a over scalar values.
    uint64_t h = 1469598103934665603ULL;
    for (char32_t c : s) {
        h ^= static_cast<uint64_t>(c);
        h *= 1099511628211ULL;
    }
    return static_cast<size_t>(h);
}

void CharNGramLM::add_gram(const std::u32string& gram) {
    size_t k = gram.size() - 1;  // order index
    ++grams_[k][gram];
    if (k >= 1) ++contexts_[k][gram.substr(0, k)];
    if (k == 0) ++total_unigrams_;
}

CharNGramLM CharNGramLM::train(const std::vector<std::string>& corpus_lines, int order,
                               double alpha) {
    if (order < 1) throw ParameterError("lm_train: order must be >= 1");
    CharNGramLM lm(order, alpha);
    lm.grams_.resize(static_cast<size_t>(order));
    lm.contexts_.resize(static_cast<size_t>(order));
    for (const std::string& raw : corpus_lines) {
        std::string line = raw;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::u32string chars = utf8_decode(line);
        std::u32string padded(static_cast<size_t>(order - 1), kBos);
        padded += chars;
        for (size_t i = static_cast<size_t>(order - 1); i < padded.size(); ++i) {
            for (int k = 1; k <= order; ++k) {
                lm.add_gram(padded.substr(i + 1 - static_cast<size_t>(k), static_cast<size_t>(k)));
            }
        }
    }
    return lm;
}

uint64_t CharNGramLM::count(const std::u32string& gram) const {
    if (gram.empty() || gram.size() > grams_.size()) return 0;
    const CountMap& m = grams_[gram.size() - 1];
    auto it = m.find(gram);
    return it == m.end() ? 0 : it->second;
}

double CharNGramLM::score(const std::u32string& context, char32_t c) const {
    if (!context.empty()) {
        std::u32string gram = context;
        gram.push_back(c);
        uint64_t num = count(gram);
        if (num > 0) {
            const CountMap& ctx = contexts_[context.size()];
            uint64_t den = ctx.at(context);
            return static_cast<double>(num) / static_cast<double>(den);
        }
        return alpha_ * score(context.substr(1), c);
    }
    std::u32string uni(1, c);
    uint64_t num = count(uni);
    if (num == 0 || total_unigrams_ == 0) return kUnseenFloor;
    return static_cast<double>(num) / static_cast<double>(total_unigrams_);
}

double CharNGramLM::log_score(const std::u32string& context, char32_t c) const {
    std::u32string ctx = context;
    size_t max_ctx = static_cast<size_t>(std::max(order_ - 1, 0));
    if (ctx.size() > max_ctx) ctx = ctx.substr(ctx.size() - max_ctx);
    return std::log(score(ctx, c));
}

double CharNGramLM::log_unigram(char32_t c) const {
    return std::log(score(std::u32string(), c));
}

std::u32string CharNGramLM::context_of(const std::u32string& prefix) const {
    size_t max_ctx = static_cast<size_t>(std::max(order_ - 1, 0));
    std::u32string ctx;
    if (prefix.size() >= max_ctx) {
        ctx = prefix.substr(prefix.size() - max_ctx);
    } else {
        ctx.assign(max_ctx - prefix.size(), kBos);
        ctx += prefix;
    }
    return ctx;
}

double CharNGramLM::sequence_log_score(const std::u32string& text) const {
    double total = 0.0;
    std::u32string prefix;
    for (char32_t c : text) {
        total += log_score(context_of(prefix), c);
        prefix.push_back(c);
    }
    return total;
}

std::vector<char32_t> CharNGramLM::alphabet() const {
    std::vector<char32_t> chars;
    if (grams_.empty()) return chars;
    for (const auto& [gram, n] : grams_[0]) chars.push_back(gram[0]);
    std::sort(chars.begin(), chars.end());
    return chars;
}

void CharNGramLM::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("lm save: cannot open " + path);
    os.write(kMagic, 4);
    write_le<uint32_t>(os, kVersion);
    write_le<uint32_t>(os, static_cast<uint32_t>(order_));
    write_le<uint64_t>(os, std::bit_cast<uint64_t>(alpha_));
    for (const CountMap& m : grams_) {
        write_le<uint64_t>(os, static_cast<uint64_t>(m.size()));
        // Sort entries for a canonical byte stream.
        std::vector<const std::pair<const std::u32string, uint64_t>*> entries;
        entries.reserve(m.size());
        for (const auto& e : m) entries.push_back(&e);
        std::sort(entries.begin(), entries.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });
        for (const auto* e : entries) {
            const std::u32string& gram = e->first;
            std::u32string context = gram.substr(0, gram.size() - 1);
            write_str(os, utf8_encode(context));
            write_str(os, utf8_encode(gram.back()));
            write_le<uint64_t>(os, e->second);
        }
    }
    if (!os) throw InputError("lm save: write failed");
}

CharNGramLM CharNGramLM::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("lm load: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw FormatError("lm load: bad magic");
    uint32_t version = read_le<uint32_t>(is);
    if (version != kVersion) throw FormatError("lm load: unsupported version");
    int order = static_cast<int>(read_le<uint32_t>(is));
    if (order < 1) throw FormatError("lm load: invalid order");
    double alpha = std::bit_cast<double>(read_le<uint64_t>(is));
    CharNGramLM lm(order, alpha);
    lm.grams_.resize(static_cast<size_t>(order));
    lm.contexts_.resize(static_cast<size_t>(order));
    for (int k = 0; k < order; ++k) {
        uint64_t n = read_le<uint64_t>(is);
        for (uint64_t i = 0; i < n; ++i) {
            std::u32string context = utf8_decode(read_str(is));
            std::u32string c = utf8_decode(read_str(is));
            uint64_t cnt = read_le<uint64_t>(is);
            if (c.size() != 1) throw FormatError("lm load: entry char must be one scalar");
            if (static_cast<int>(context.size()) != k)
                throw FormatError("lm load: context length does not match order section");
            std::u32string gram = context + c;
            lm.grams_[static_cast<size_t>(k)][gram] = cnt;
            if (k >= 1) lm.contexts_[static_cast<size_t>(k)][context] += cnt;
            if (k == 0) lm.total_unigrams_ += cnt;
        }
    }
    return lm;
}

}  // namespace linerec
