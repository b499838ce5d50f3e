#include "ed2d/text.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace ed2d::text {
namespace {

std::size_t sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;
}

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Calls `on_token(end_offset)` after every complete token. Returning false stops the scan.
template <typename Fn>
void scan_tokens(std::string_view s, Fn&& on_token) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            while (i < s.size() && is_word_byte(static_cast<unsigned char>(s[i]))) ++i;
        } else {
            i += std::min(sequence_length(c), s.size() - i);
        }
        if (!on_token(i)) return;
    }
}

}  // namespace

std::size_t count_tokens(std::string_view s) {
    std::size_t n = 0;
    scan_tokens(s, [&](std::size_t) {
        ++n;
        return true;
    });
    return n;
}

std::string truncate_tokens(std::string_view s, std::size_t max_tokens) {
    if (max_tokens == 0) return {};
    std::size_t n = 0;
    std::size_t cut = s.size();
    scan_tokens(s, [&](std::size_t end) {
        if (++n == max_tokens) {
            cut = end;
            return false;
        }
        return true;
    });
    std::string out(s.substr(0, cut));
    while (!out.empty() && is_space(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
    return out;
}

std::string normalize_phrase(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char ch : to_lower(s)) {
        if (is_space(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

std::size_t code_points(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size(); ++n) {
        i += std::min(sequence_length(static_cast<unsigned char>(s[i])), s.size() - i);
    }
    return n;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string strip_markup(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') {
            in_tag = true;
        } else if (c == '>' && in_tag) {
            in_tag = false;
        } else if (!in_tag) {
            out.push_back(c);
        }
    }
    static constexpr std::pair<std::string_view, std::string_view> kEntities[] = {
        {"&quot;", "\""}, {"&#039;", "'"}, {"&#39;", "'"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&amp;", "&"},
    };
    for (const auto& [entity, replacement] : kEntities) {
        for (auto pos = out.find(entity); pos != std::string::npos; pos = out.find(entity, pos)) {
            out.replace(pos, entity.size(), replacement);
            pos += replacement.size();
        }
    }
    return out;
}

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

}  // namespace ed2d::text
