#pragma once

// Shared primitives: error types, deterministic RNG, content hashing,
// lossless line splitting, file I/O, and the token scanner that the
// extraction, substitution, and audit layers all share. Keeping one
// scanner is what makes the zero-leak guarantee hold: anything the
// auditor can find, the substituter saw first.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

namespace plog {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Errors. Codes line up with the CLI exit codes.
// ---------------------------------------------------------------------------

enum class Errc : int {
    Usage = 1,
    Config = 2,
    Io = 3,
    Leak = 4,
    Capacity = 5,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

inline Error io_error(const std::string& what) { return Error(Errc::Io, what); }
inline Error config_error(const std::string& what) { return Error(Errc::Config, what); }
inline Error capacity_error(const std::string& what) { return Error(Errc::Capacity, what); }

// ---------------------------------------------------------------------------
// Domain basics.
// ---------------------------------------------------------------------------

enum class PiiKind { User = 0, Ip = 1, Project = 2 };

inline constexpr std::string_view kind_tag(PiiKind k) {
    switch (k) {
        case PiiKind::User: return "user";
        case PiiKind::Ip: return "ip";
        case PiiKind::Project: return "project";
    }
    return "?";
}

inline std::optional<PiiKind> parse_kind_tag(std::string_view tag) {
    if (tag == "user") return PiiKind::User;
    if (tag == "ip") return PiiKind::Ip;
    if (tag == "project") return PiiKind::Project;
    return std::nullopt;
}

struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const ByteSpan&) const = default;
};

// Width at which ps/top style columns cut usernames off.
inline constexpr std::size_t kUserTruncWidth = 8;

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64: stable across platforms and compilers,
// unlike std::uniform_int_distribution. Stream seeds are derived with mix()
// so per-file output never depends on generation order.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Unbiased draw in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) return 0;
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }

    // Inclusive range.
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

    double unit01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit01() < p; }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// SHA-256 (compact, dependency-free) used for map-file checksums.
// ---------------------------------------------------------------------------

namespace detail {

struct Sha256 {
    std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    unsigned char buf[64];
    std::size_t buflen = 0;
    std::uint64_t total = 0;

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void block(const unsigned char* p) {
        static constexpr std::uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
            0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
            0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
            0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
            0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
            0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
            0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
            0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
            0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[i * 4]) << 24) | (std::uint32_t(p[i * 4 + 1]) << 16) |
                   (std::uint32_t(p[i * 4 + 2]) << 8) | std::uint32_t(p[i * 4 + 3]);
        for (int i = 16; i < 64; ++i) {
            std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6],
                      hh = h[7];
        for (int i = 0; i < 64; ++i) {
            std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t t1 = hh + s1 + ch + K[i] + w[i];
            std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t t2 = s0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }

    void update(const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        total += len;
        while (len > 0) {
            std::size_t take = std::min(len, std::size_t{64} - buflen);
            std::memcpy(buf + buflen, p, take);
            buflen += take;
            p += take;
            len -= take;
            if (buflen == 64) {
                block(buf);
                buflen = 0;
            }
        }
    }

    std::array<unsigned char, 32> finish() {
        std::uint64_t bits = total * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        unsigned char zero = 0;
        while (buflen != 56) update(&zero, 1);
        unsigned char lenbuf[8];
        for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(lenbuf, 8);
        std::array<unsigned char, 32> out;
        for (int i = 0; i < 8; ++i) {
            out[i * 4] = static_cast<unsigned char>(h[i] >> 24);
            out[i * 4 + 1] = static_cast<unsigned char>(h[i] >> 16);
            out[i * 4 + 2] = static_cast<unsigned char>(h[i] >> 8);
            out[i * 4 + 3] = static_cast<unsigned char>(h[i]);
        }
        return out;
    }
};

}  // namespace detail

inline std::array<unsigned char, 32> sha256_digest(std::string_view data) {
    detail::Sha256 s;
    s.update(data.data(), data.size());
    return s.finish();
}

// First 8 bytes of the SHA-256 digest as 16 lowercase hex chars.
inline std::string content_hash_hex(std::string_view data) {
    auto d = sha256_digest(data);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(16);
    for (int i = 0; i < 8; ++i) {
        out.push_back(hex[d[i] >> 4]);
        out.push_back(hex[d[i] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lossless line handling. Lines are stored without their '\n'; the split
// remembers whether the input ended with one so the exact bytes can be
// rebuilt. Content is treated as raw bytes split on 0x0A only.
// ---------------------------------------------------------------------------

struct LineSplit {
    std::vector<std::string_view> lines;
    bool final_newline = false;
};

inline LineSplit split_lines(std::string_view text) {
    LineSplit out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char* nl =
            static_cast<const char*>(std::memchr(text.data() + pos, '\n', text.size() - pos));
        if (nl == nullptr) {
            out.lines.push_back(text.substr(pos));
            out.final_newline = false;
            return out;
        }
        std::size_t at = static_cast<std::size_t>(nl - text.data());
        out.lines.push_back(text.substr(pos, at - pos));
        pos = at + 1;
    }
    out.final_newline = !text.empty();
    return out;
}

inline std::size_t count_lines(std::string_view text) {
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char* nl =
            static_cast<const char*>(std::memchr(text.data() + pos, '\n', text.size() - pos));
        if (nl == nullptr) return n + 1;
        ++n;
        pos = static_cast<std::size_t>(nl - text.data()) + 1;
    }
    return n;
}

// Line count without loading the file: fixed-size buffered scan.
inline std::uint64_t count_lines_in_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for read: " + path.string());
    std::vector<char> buf(1 << 20);
    std::uint64_t newlines = 0;
    bool any = false, last_was_newline = true;
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        std::streamsize got = in.gcount();
        if (got <= 0) break;
        any = true;
        const char* p = buf.data();
        const char* end = p + got;
        while ((p = static_cast<const char*>(std::memchr(p, '\n', end - p))) != nullptr) {
            ++newlines;
            ++p;
        }
        last_was_newline = buf[static_cast<std::size_t>(got - 1)] == '\n';
    }
    if (in.bad()) throw io_error("read failed: " + path.string());
    return newlines + (any && !last_was_newline ? 1 : 0);
}

inline std::string join_lines(const std::vector<std::string>& lines, bool final_newline) {
    std::string out;
    std::size_t total = 0;
    for (const auto& l : lines) total += l.size() + 1;
    out.reserve(total);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        if (i + 1 < lines.size() || final_newline) out.push_back('\n');
    }
    return out;
}

// ---------------------------------------------------------------------------
// File I/O.
// ---------------------------------------------------------------------------

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for read: " + path.string());
    std::string data;
    in.seekg(0, std::ios::end);
    auto len = in.tellg();
    if (len < 0) throw io_error("cannot stat: " + path.string());
    data.resize(static_cast<std::size_t>(len));
    in.seekg(0);
    in.read(data.data(), static_cast<std::streamsize>(data.size()));
    if (!in) throw io_error("short read: " + path.string());
    return data;
}

// Reads the byte range [span.begin, span.end).
inline std::string read_file_span(const fs::path& path, ByteSpan span) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for read: " + path.string());
    std::string data;
    data.resize(span.size());
    in.seekg(static_cast<std::streamoff>(span.begin));
    in.read(data.data(), static_cast<std::streamsize>(data.size()));
    if (!in) throw io_error("short read: " + path.string());
    return data;
}

inline void write_file(const fs::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for write: " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw io_error("short write: " + path.string());
}

// Write via a temp file in the same directory, fsync, then rename over the
// target. A crashed writer leaves no readable file at `path`.
inline void write_file_atomic(const fs::path& path, std::string_view data) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open temp file: " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw io_error("short write: " + tmp.string());
        }
    }
    int fd = ::open(tmp.c_str(), O_RDONLY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw io_error("rename failed: " + path.string());
    }
}

// Snapshot files are named <node>.<YYYY-MM-DD>.txt; everything else in a
// corpus directory (manifests, population lists, reports) is ignored.
inline bool is_snapshot_filename(std::string_view name) {
    if (name.size() < 16 || !name.ends_with(".txt")) return false;
    std::string_view stem = name.substr(0, name.size() - 4);
    std::size_t dot = stem.rfind('.');
    if (dot == std::string_view::npos || dot == 0) return false;
    std::string_view date = stem.substr(dot + 1);
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(date[i]))) return false;
    std::string_view node = stem.substr(0, dot);
    for (char c : node)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

// Relative paths of all snapshot files under root, sorted.
inline std::vector<fs::path> list_corpus_files(const fs::path& root) {
    if (!fs::exists(root) || !fs::is_directory(root))
        throw io_error("not a directory: " + root.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        // Symlinks are listed even when dangling so that unreadable corpus
        // entries surface as recorded errors instead of vanishing.
        if (!entry.is_regular_file() && !entry.is_symlink()) continue;
        if (entry.is_directory()) continue;
        if (is_snapshot_filename(entry.path().filename().string()))
            out.push_back(fs::relative(entry.path(), root));
    }
    std::sort(out.begin(), out.end(),
              [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });
    return out;
}

// ---------------------------------------------------------------------------
// Token scanning. A PII token is delimited by any character outside
// [A-Za-z0-9_-]; '/' is therefore always a boundary, which is what makes
// path segments matchable. IPv4 tokens additionally absorb dots, must be
// strict dotted quads (octets 0-255, no leading zeros) and must not extend
// a longer dotted-numeric run on either side.
// ---------------------------------------------------------------------------

inline bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') ||
           u == '_' || u == '-';
}

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

// If a valid IPv4 token starts at `pos`, returns the offset one past it.
// `pos` must be at a word boundary (the scanner guarantees this).
inline std::optional<std::size_t> ipv4_token_end(std::string_view text, std::size_t pos) {
    if (pos >= text.size() || !is_ascii_digit(text[pos])) return std::nullopt;
    // Must not continue a dotted-numeric run: "1.2.3.4.5" never yields an IP.
    if (pos >= 2 && text[pos - 1] == '.' && is_ascii_digit(text[pos - 2])) return std::nullopt;
    std::size_t p = pos;
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (p >= text.size() || text[p] != '.') return std::nullopt;
            ++p;
        }
        std::size_t start = p;
        int value = 0;
        while (p < text.size() && is_ascii_digit(text[p]) && p - start < 3) {
            value = value * 10 + (text[p] - '0');
            ++p;
        }
        std::size_t len = p - start;
        if (len == 0 || value > 255) return std::nullopt;
        if (len > 1 && text[start] == '0') return std::nullopt;  // no leading zeros
    }
    if (p < text.size()) {
        if (is_word_char(text[p])) return std::nullopt;
        if (text[p] == '.' && p + 1 < text.size() && is_ascii_digit(text[p + 1]))
            return std::nullopt;
    }
    return p;
}

struct Token {
    ByteSpan span;
    bool is_ipv4 = false;
};

// Calls fn(Token) for every boundary-delimited token in `text`, left to
// right. IPv4 candidates are recognized first; their octets are not
// re-reported as word tokens.
template <typename Fn>
inline void scan_tokens(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if (!is_word_char(c)) {
            ++i;
            continue;
        }
        if (is_ascii_digit(c)) {
            if (auto end = ipv4_token_end(text, i)) {
                fn(Token{{i, *end}, true});
                i = *end;
                continue;
            }
        }
        std::size_t e = i;
        while (e < n && is_word_char(text[e])) ++e;
        fn(Token{{i, e}, false});
        i = e;
    }
}

// ---------------------------------------------------------------------------
// Case classes. Case-insensitive (project) replacements mirror the matched
// token's case shape so reverse-pseudonymization restores the original
// bytes for the lower/UPPER/Title forms the corpus actually contains.
// ---------------------------------------------------------------------------

enum class CaseClass { Lower, Upper, Title, Other };

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; }
inline char ascii_upper(char c) { return (c >= 'a' && c <= 'z') ? char(c - 'a' + 'A') : c; }

inline std::string to_lower_copy(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = ascii_lower(c);
    return out;
}

inline CaseClass case_class_of(std::string_view token) {
    bool any = false, all_lower = true, all_upper = true;
    bool first_cased_upper = false, rest_lower = true, seen_first = false;
    for (char c : token) {
        bool lower = c >= 'a' && c <= 'z';
        bool upper = c >= 'A' && c <= 'Z';
        if (!lower && !upper) continue;
        any = true;
        if (lower) all_upper = false;
        if (upper) all_lower = false;
        if (!seen_first) {
            seen_first = true;
            first_cased_upper = upper;
        } else if (upper) {
            rest_lower = false;
        }
    }
    if (!any) return CaseClass::Other;
    if (all_upper) return CaseClass::Upper;
    if (all_lower) return CaseClass::Lower;
    if (first_cased_upper && rest_lower) return CaseClass::Title;
    return CaseClass::Other;
}

inline std::string apply_case_class(CaseClass cls, std::string_view canonical) {
    std::string out(canonical);
    switch (cls) {
        case CaseClass::Lower:
            for (char& c : out) c = ascii_lower(c);
            break;
        case CaseClass::Upper:
            for (char& c : out) c = ascii_upper(c);
            break;
        case CaseClass::Title: {
            bool first = true;
            for (char& c : out) {
                bool cased = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
                if (!cased) continue;
                c = first ? ascii_upper(c) : ascii_lower(c);
                first = false;
            }
            break;
        }
        case CaseClass::Other:
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Whitespace field splitting (space and tab), with byte ranges.
// ---------------------------------------------------------------------------

struct Field {
    ByteSpan span;
};

inline std::vector<Field> split_fields(std::string_view line) {
    std::vector<Field> out;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (i < n) {
        if (line[i] == ' ' || line[i] == '\t') {
            ++i;
            continue;
        }
        std::size_t e = i;
        while (e < n && line[e] != ' ' && line[e] != '\t') ++e;
        out.push_back(Field{{i, e}});
        i = e;
    }
    return out;
}

// Default command-name denylist: usernames colliding with these are only
// substituted in user columns and path segments.
inline const std::vector<std::string>& default_denylist() {
    static const std::vector<std::string> names = {
        "joe",  "vi",   "vim",  "nano", "ed",   "emacs", "top",  "ps",   "ls",
        "df",   "w",    "cat",  "grep", "awk",  "sed",   "make", "gcc",  "ssh",
        "tmux", "bash", "find", "tar",  "less", "more",  "man",  "time",
    };
    return names;
}

}  // namespace plog
