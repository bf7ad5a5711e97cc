#include "relpol/normalize.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "relpol/errors.hpp"
#include "relpol/hash.hpp"

namespace relpol::normalize {

namespace {

using U32 = std::u32string;

// ---------------------------------------------------------------------------
// UTF-8 <-> codepoints. Decoding is lenient: malformed sequences become
// U+FFFD, which the symbol stage later deletes, keeping normalize() total.

U32 decode_utf8(const std::string& s) {
  U32 out;
  out.reserve(s.size());
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0 && i + 1 < n &&
               (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80) {
      cp = static_cast<char32_t>(b0 & 0x1F) << 6 |
           (static_cast<unsigned char>(s[i + 1]) & 0x3F);
      if (cp < 0x80) cp = 0xFFFD;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0 && i + 2 < n &&
               (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80 &&
               (static_cast<unsigned char>(s[i + 2]) & 0xC0) == 0x80) {
      cp = static_cast<char32_t>(b0 & 0x0F) << 12 |
           static_cast<char32_t>(static_cast<unsigned char>(s[i + 1]) & 0x3F)
               << 6 |
           (static_cast<unsigned char>(s[i + 2]) & 0x3F);
      if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0 && i + 3 < n &&
               (static_cast<unsigned char>(s[i + 1]) & 0xC0) == 0x80 &&
               (static_cast<unsigned char>(s[i + 2]) & 0xC0) == 0x80 &&
               (static_cast<unsigned char>(s[i + 3]) & 0xC0) == 0x80) {
      cp = static_cast<char32_t>(b0 & 0x07) << 18 |
           static_cast<char32_t>(static_cast<unsigned char>(s[i + 1]) & 0x3F)
               << 12 |
           static_cast<char32_t>(static_cast<unsigned char>(s[i + 2]) & 0x3F)
               << 6 |
           (static_cast<unsigned char>(s[i + 3]) & 0x3F);
      if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(const U32& s) {
  std::string out;
  out.reserve(s.size());
  for (const char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Character classes.

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_ascii_alpha(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

bool is_handle_char(char32_t c) {
  return is_ascii_alpha(c) || is_ascii_digit(c) || c == U'_';
}

// Letters and digits for boundary decisions; covers Latin (with umlauts),
// Greek and Cyrillic, which is what shows up in this corpus.
bool is_word_char(char32_t c) {
  if (is_ascii_alpha(c) || is_ascii_digit(c) || c == U'_') return true;
  if (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7) return true;
  if (c >= 0x370 && c <= 0x4FF) return true;
  return false;
}

bool is_whitespace(char32_t c) {
  switch (c) {
    case 0x09:
    case 0x0A:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x20:
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
    case 0xFEFF:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_deleted_punctuation(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  if (c >= 0xA1 && c <= 0xBF) return true;
  if (c == 0xAD || c == 0xD7 || c == 0xF7) return true;
  if (c >= 0x200B && c <= 0x200F) return true;   // zero-width and marks
  if (c >= 0x2010 && c <= 0x2027) return true;   // dashes, quotes, ellipsis
  if (c >= 0x202A && c <= 0x202E) return true;   // embedding controls
  if (c >= 0x2030 && c <= 0x205E) return true;
  if (c >= 0x2060 && c <= 0x206F) return true;
  return false;
}

bool is_deleted_symbol(char32_t c) {
  if (c >= 0x2070 && c <= 0x2BFF) return true;   // currency, arrows, symbols
  if (c >= 0x2E00 && c <= 0x2E7F) return true;
  if (c >= 0x3001 && c <= 0x303F) return true;
  if (c >= 0xFE00 && c <= 0xFE6F) return true;   // variation selectors etc.
  if (c >= 0xFF00 && c <= 0xFFFF) return true;   // fullwidth forms, specials
  if (c >= 0x1D000) return true;                 // SMP symbol planes, emoji
  return false;
}

char32_t ascii_lower(char32_t c) {
  return (c >= U'A' && c <= U'Z') ? c + 0x20 : c;
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c == 0x178) return 0xFF;  // Y with diaeresis
  // Latin Extended-A upper/lower pairs.
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) {
    return (c % 2 == 0) ? c + 1 : c;
  }
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) {
    return (c % 2 == 1) ? c + 1 : c;
  }
  return c;
}

void emit_token(U32& out, const char32_t* token) {
  out.push_back(U' ');
  for (const char32_t* p = token; *p; ++p) out.push_back(*p);
  out.push_back(U' ');
}

bool match_ci(const U32& s, std::size_t pos, std::u32string_view needle) {
  if (pos + needle.size() > s.size()) return false;
  for (std::size_t k = 0; k < needle.size(); ++k) {
    if (ascii_lower(s[pos + k]) != ascii_lower(needle[k])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Stage 1: URL spans. Scheme-prefixed or www.-prefixed tokens plus the t.co
// shortener; the span runs to the next whitespace.

U32 replace_urls(const U32& in) {
  U32 out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const bool at_token_start = (i == 0) || !is_word_char(in[i - 1]);
    if (at_token_start) {
      std::size_t prefix = 0;
      if (match_ci(in, i, U"http://") || match_ci(in, i, U"https://")) {
        prefix = match_ci(in, i, U"https://") ? 8 : 7;
      } else if (match_ci(in, i, U"www.") && i + 4 < in.size() &&
                 !is_whitespace(in[i + 4])) {
        prefix = 4;
      } else if (match_ci(in, i, U"t.co/") && i + 5 < in.size() &&
                 !is_whitespace(in[i + 5])) {
        prefix = 5;
      }
      if (prefix > 0) {
        std::size_t j = i + prefix;
        while (j < in.size() && !is_whitespace(in[j])) ++j;
        emit_token(out, U"URL");
        i = j;
        continue;
      }
    }
    out.push_back(in[i++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage 2: emoticons. Specific classes first (longest match), then a
// conservative generic pattern: eye, optional nose, mouth. Replaced before
// punctuation deletion so the glyphs still exist.

struct EmoticonEntry {
  std::u32string_view pattern;
  const char32_t* token;
  bool needs_left_boundary;  // letter-based emoticons like XD
};

// Longest patterns first so ":-))" wins over ":-)".
const EmoticonEntry kEmoticons[] = {
    {U":-))", U"happysmiley", false}, {U":-)", U"happysmiley", false},
    {U";-)", U"happysmiley", false},  {U":-D", U"laughingsmiley", false},
    {U":-(", U"sadsmiley", false},    {U"XD", U"laughingsmiley", true},
    {U":)", U"happysmiley", false},   {U":D", U"happysmiley", false},
    {U":(", U"sadsmiley", false},
};

bool is_emoticon_eye(char32_t c) { return c == U':' || c == U';' || c == U'='; }

bool is_emoticon_nose(char32_t c) {
  return c == U'-' || c == U'\'' || c == U'^' || c == U'o';
}

bool is_emoticon_mouth(char32_t c) {
  switch (c) {
    case U')':
    case U'(':
    case U'D':
    case U'd':
    case U'P':
    case U'p':
    case U'/':
    case U'\\':
    case U'|':
    case U']':
    case U'[':
    case U'*':
    case U'O':
    case U'o':
      return true;
    default:
      return false;
  }
}

U32 replace_emoticons(const U32& in) {
  U32 out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const bool left_ok = (i == 0) || !is_word_char(in[i - 1]);
    std::size_t matched_len = 0;
    const char32_t* token = nullptr;
    for (const auto& entry : kEmoticons) {
      if (entry.needs_left_boundary && !left_ok) continue;
      if (!match_ci(in, i, entry.pattern)) continue;
      if (entry.pattern != U"XD" &&
          in.compare(i, entry.pattern.size(), entry.pattern) != 0) {
        continue;  // smiley glyph classes are case-sensitive ( :D vs :d )
      }
      const std::size_t end = i + entry.pattern.size();
      if (end < in.size() && is_word_char(in[end])) continue;
      matched_len = entry.pattern.size();
      token = entry.token;
      break;
    }
    if (matched_len == 0 && is_emoticon_eye(in[i])) {
      // Generic form, tried with and without the nose.
      std::size_t len = 0;
      if (i + 2 < in.size() && is_emoticon_nose(in[i + 1]) &&
          is_emoticon_mouth(in[i + 2])) {
        len = 3;
      } else if (i + 1 < in.size() && is_emoticon_mouth(in[i + 1])) {
        len = 2;
      }
      if (len > 0) {
        const std::size_t end = i + len;
        if (end >= in.size() || !is_word_char(in[end])) {
          matched_len = len;
          token = U"emote";
        }
      }
    }
    if (matched_len > 0) {
      emit_token(out, token);
      i += matched_len;
    } else {
      out.push_back(in[i++]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages 3+4: handle pooling. One pass; the railway handle set decides
// between "dbusername" and "twitterusername".

U32 replace_handles(const U32& in, const std::vector<U32>& db_handles) {
  U32 out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const bool left_ok = (i == 0) || !is_word_char(in[i - 1]);
    if (in[i] == U'@' && left_ok && i + 1 < in.size() &&
        is_handle_char(in[i + 1])) {
      std::size_t j = i + 1;
      while (j < in.size() && is_handle_char(in[j])) ++j;
      U32 name = in.substr(i + 1, j - i - 1);
      for (auto& c : name) c = ascii_lower(c);
      bool is_db = false;
      for (const auto& h : db_handles) {
        if (name == h) {
          is_db = true;
          break;
        }
      }
      emit_token(out, is_db ? U"dbusername" : U"twitterusername");
      i = j;
      continue;
    }
    out.push_back(in[i++]);
  }
  return out;
}

// Stage 5: strip the "#" marker from hashtags, keeping the body.
U32 strip_hashtag_marks(const U32& in) {
  U32 out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == U'#' && i + 1 < in.size() && is_word_char(in[i + 1])) continue;
    out.push_back(in[i]);
  }
  return out;
}

// Stage 6: S-Bahn spelling variants pooled to one token.
U32 replace_sbahn(const U32& in) {
  U32 out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const bool left_ok = (i == 0) || !is_word_char(in[i - 1]);
    if (left_ok && (ascii_lower(in[i]) == U's') && i + 5 < in.size() &&
        (in[i + 1] == U'-' || in[i + 1] == U' ') &&
        match_ci(in, i + 2, U"bahn") &&
        (i + 6 >= in.size() || !is_word_char(in[i + 6]))) {
      emit_token(out, U"sbahn");
      i += 6;
      continue;
    }
    out.push_back(in[i++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage 7: money, dates, clock times, then remaining standalone numbers.

// Matches [0-9]+([.,][0-9]+)* starting at i; returns the end or i on failure.
std::size_t match_number(const U32& in, std::size_t i) {
  std::size_t j = i;
  while (j < in.size() && is_ascii_digit(in[j])) ++j;
  if (j == i) return i;
  while (j + 1 < in.size() && (in[j] == U'.' || in[j] == U',') &&
         is_ascii_digit(in[j + 1])) {
    ++j;
    while (j < in.size() && is_ascii_digit(in[j])) ++j;
  }
  return j;
}

std::size_t match_digits(const U32& in, std::size_t i, std::size_t min_len,
                         std::size_t max_len, long* value) {
  std::size_t j = i;
  long v = 0;
  while (j < in.size() && is_ascii_digit(in[j]) && j - i < max_len) {
    v = v * 10 + static_cast<long>(in[j] - U'0');
    ++j;
  }
  if (j - i < min_len || (j < in.size() && is_ascii_digit(in[j]))) return i;
  *value = v;
  return j;
}

// dd.mm(.yyyy) and dd/mm(/yyyy) with range validation.
std::size_t match_date(const U32& in, std::size_t i) {
  long day = 0, month = 0, year = 0;
  std::size_t j = match_digits(in, i, 1, 2, &day);
  if (j == i || day < 1 || day > 31) return i;
  if (j >= in.size() || (in[j] != U'.' && in[j] != U'/')) return i;
  const char32_t sep = in[j];
  std::size_t k = match_digits(in, j + 1, 1, 2, &month);
  if (k == j + 1 || month < 1 || month > 12) return i;
  if (k < in.size() && in[k] == sep) {
    const std::size_t m = match_digits(in, k + 1, 2, 4, &year);
    if (m != k + 1 && (m - k - 1 == 2 || m - k - 1 == 4)) return m;
  }
  return k;
}

// hh:mm(:ss) with range validation; clock times map to "dates".
std::size_t match_time(const U32& in, std::size_t i) {
  long hour = 0, minute = 0, second = 0;
  std::size_t j = match_digits(in, i, 1, 2, &hour);
  if (j == i || hour > 23) return i;
  if (j >= in.size() || in[j] != U':') return i;
  std::size_t k = match_digits(in, j + 1, 2, 2, &minute);
  if (k == j + 1 || minute > 59) return i;
  if (k < in.size() && in[k] == U':') {
    const std::size_t m = match_digits(in, k + 1, 2, 2, &second);
    if (m != k + 1 && second <= 59) return m;
  }
  return k;
}

// Currency marker: the euro sign or a standalone EUR/Euro/Euros word.
std::size_t match_currency(const U32& in, std::size_t i) {
  if (i < in.size() && in[i] == 0x20AC) return i + 1;
  for (const auto word : {std::u32string_view{U"euros"},
                          std::u32string_view{U"euro"},
                          std::u32string_view{U"eur"}}) {
    if (match_ci(in, i, word)) {
      const std::size_t end = i + word.size();
      if (end >= in.size() || !is_word_char(in[end])) return end;
    }
  }
  return i;
}

U32 replace_numeric(const U32& in) {
  U32 out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const bool left_ok = (i == 0) || !is_word_char(in[i - 1]);
    if (left_ok && in[i] == 0x20AC) {
      // Currency marker followed by an amount.
      std::size_t j = i + 1;
      if (j < in.size() && in[j] == U' ') ++j;
      const std::size_t end = match_number(in, j);
      if (end != j && (end >= in.size() || !is_word_char(in[end]))) {
        emit_token(out, U"money");
        i = end;
        continue;
      }
    }
    if (left_ok && is_ascii_digit(in[i])) {
      std::size_t end = match_date(in, i);
      const char32_t* token = U"dates";
      if (end == i) {
        end = match_time(in, i);
      }
      if (end == i) {
        end = match_number(in, i);
        token = U"number";
        if (end != i) {
          // Amount followed by a currency marker becomes "money".
          std::size_t j = end;
          if (j < in.size() && in[j] == U' ') ++j;
          const std::size_t cur = match_currency(in, j);
          if (cur != j) {
            emit_token(out, U"money");
            i = cur;
            continue;
          }
        }
      }
      if (end != i && (end >= in.size() || !is_word_char(in[end]))) {
        emit_token(out, token);
        i = end;
        continue;
      }
    }
    if (left_ok) {
      // EUR/Euro word directly leading an amount.
      const std::size_t cur = match_currency(in, i);
      if (cur != i && in[i] != 0x20AC) {
        std::size_t j = cur;
        if (j < in.size() && in[j] == U' ') ++j;
        const std::size_t end = match_number(in, j);
        if (end != j && (end >= in.size() || !is_word_char(in[end]))) {
          emit_token(out, U"money");
          i = end;
          continue;
        }
      }
    }
    // Copy the rest of the current word to keep tokens such as "U5" intact.
    if (is_word_char(in[i])) {
      while (i < in.size() && is_word_char(in[i])) out.push_back(in[i++]);
    } else {
      out.push_back(in[i++]);
    }
  }
  return out;
}

// Stage 8: repeated terminal punctuation becomes an intensity token.
U32 replace_punctuation_runs(const U32& in) {
  U32 out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const char32_t c = in[i];
    if (c == U'?' || c == U'!' || c == U'.') {
      std::size_t j = i;
      while (j < in.size() && in[j] == c) ++j;
      if (j - i >= 2) {
        emit_token(out, c == U'?'   ? U"strongquestion"
                        : c == U'!' ? U"strongexclamation"
                                    : U"annoyeddots");
        i = j;
        continue;
      }
    }
    out.push_back(in[i++]);
  }
  return out;
}

// Stages 9+10: delete punctuation, then emoji and symbol codepoints.
U32 delete_codepoints(const U32& in, bool (*pred)(char32_t)) {
  U32 out;
  out.reserve(in.size());
  for (const char32_t c : in) {
    if (!pred(c)) out.push_back(c);
  }
  return out;
}

// Stage 11: collapse whitespace runs to single spaces and trim.
U32 collapse_whitespace(const U32& in) {
  U32 out;
  out.reserve(in.size());
  bool pending_space = false;
  for (const char32_t c : in) {
    if (is_whitespace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

U32 lowercase_fold(const U32& in) {
  U32 out;
  out.reserve(in.size());
  for (const char32_t c : in) out.push_back(to_lower(c));
  return out;
}

}  // namespace

const std::vector<std::string>& replacement_tokens() {
  static const std::vector<std::string> tokens = {
      "strongquestion", "strongexclamation", "annoyeddots",
      "URL",            "number",            "money",
      "dates",          "twitterusername",   "dbusername",
      "sbahn",          "sadsmiley",         "happysmiley",
      "laughingsmiley", "emote"};
  return tokens;
}

std::string RuleSet::id() const {
  std::string id = version;
  id += casing_mode == CasingMode::cased ? "-cased" : "-lower";
  const RuleSet defaults;
  if (db_handles != defaults.db_handles) {
    std::string joined;
    for (const auto& h : db_handles) {
      joined += h;
      joined += '\n';
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(joined)));
    id += "-h";
    id += buf;
  }
  return id;
}

std::string normalize(const std::string& text, const RuleSet& rules) {
  std::vector<U32> db_handles;
  db_handles.reserve(rules.db_handles.size());
  for (const auto& h : rules.db_handles) {
    U32 u = decode_utf8(h);
    for (auto& c : u) c = ascii_lower(c);
    db_handles.push_back(std::move(u));
  }

  auto pipeline = [&](U32 s) {
    s = replace_urls(s);
    s = replace_emoticons(s);
    s = replace_handles(s, db_handles);
    s = strip_hashtag_marks(s);
    s = replace_sbahn(s);
    s = replace_numeric(s);
    s = replace_punctuation_runs(s);
    s = delete_codepoints(s, is_deleted_punctuation);
    s = delete_codepoints(s, is_deleted_symbol);
    s = collapse_whitespace(s);
    if (rules.casing_mode == CasingMode::lowercased) s = lowercase_fold(s);
    return s;
  };

  // Deletions can uncover new matches ("S - Bahn" -> "S Bahn" -> "sbahn"),
  // so the pass repeats until stable. Replacement tokens never re-match, so
  // two or three passes always suffice.
  U32 s = decode_utf8(text);
  for (int pass = 0; pass < 4; ++pass) {
    U32 next = pipeline(s);
    if (next == s) break;
    s = std::move(next);
  }
  return encode_utf8(s);
}

corpus::LabeledDataset normalize_dataset(const corpus::LabeledDataset& dataset,
                                         const RuleSet& rules) {
  corpus::LabeledDataset result = dataset;
  for (auto& doc : result.documents) doc.text = normalize(doc.text, rules);
  return result;
}

void write_rules(const RuleSet& rules, std::ostream& out) {
  out << "# relpol normalization rules\n";
  out << "version=" << rules.version << "\n";
  out << "casing=" << (rules.casing_mode == CasingMode::cased ? "cased"
                                                              : "lowercased")
      << "\n";
  for (const auto& h : rules.db_handles) out << "db_handle=" << h << "\n";
  out << "rule\turl\thttp:// https:// www. t.co/ span-to-whitespace\tURL\n";
  out << "rule\temoticon-sad\t:( :-(\tsadsmiley\n";
  out << "rule\temoticon-happy\t:) :-) ;-) :-)) :D\thappysmiley\n";
  out << "rule\temoticon-laughing\t:-D XD\tlaughingsmiley\n";
  out << "rule\temoticon-other\teye[:;=] nose?[-'^o] mouth[()[]dDpPoO/\\|*]\t"
         "emote\n";
  out << "rule\tdb-handle\t@name in db_handle list\tdbusername\n";
  out << "rule\thandle\t@[A-Za-z0-9_]+\ttwitterusername\n";
  out << "rule\thashtag\t#word strip-marker\t(delete)\n";
  out << "rule\tsbahn\ts[- ]bahn\tsbahn\n";
  out << "rule\tmoney\tnumber+currency | currency+number; currency: EUR Euro "
         "Euros \xE2\x82\xAC\tmoney\n";
  out << "rule\tdates\td{1,2}[./]d{1,2}([./]d{2|4})? | h{1,2}:mm(:ss)?\t"
         "dates\n";
  out << "rule\tnumber\t[0-9]+([.,][0-9]+)*\tnumber\n";
  out << "rule\tstrongquestion\t?{2,}\tstrongquestion\n";
  out << "rule\tstrongexclamation\t!{2,}\tstrongexclamation\n";
  out << "rule\tannoyeddots\t.{2,}\tannoyeddots\n";
  out << "rule\tpunctuation\tascii+unicode punctuation classes\t(delete)\n";
  out << "rule\tsymbols\temoji and symbol codepoints\t(delete)\n";
  out << "rule\twhitespace\tcollapse runs, trim\t(space)\n";
}

RuleSet read_rules(std::istream& in) {
  RuleSet rules;
  rules.db_handles.clear();
  const auto& allowed = replacement_tokens();
  std::string line;
  std::size_t line_no = 0;
  bool saw_version = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.starts_with("version=")) {
      rules.version = line.substr(8);
      saw_version = true;
      continue;
    }
    if (line.starts_with("casing=")) {
      const std::string v = line.substr(7);
      if (v == "cased")
        rules.casing_mode = CasingMode::cased;
      else if (v == "lowercased")
        rules.casing_mode = CasingMode::lowercased;
      else
        throw DataError("rules line " + std::to_string(line_no) +
                        ": unknown casing \"" + v + "\"");
      continue;
    }
    if (line.starts_with("db_handle=")) {
      rules.db_handles.push_back(line.substr(10));
      continue;
    }
    if (line.starts_with("rule\t")) {
      const std::size_t last_tab = line.rfind('\t');
      const std::string replacement = line.substr(last_tab + 1);
      if (replacement != "(delete)" && replacement != "(space)" &&
          std::find(allowed.begin(), allowed.end(), replacement) ==
              allowed.end()) {
        throw DataError("rules line " + std::to_string(line_no) +
                        ": replacement \"" + replacement +
                        "\" not in the closed token set");
      }
      continue;
    }
    throw DataError("rules line " + std::to_string(line_no) +
                    ": unrecognized entry");
  }
  if (!saw_version) throw DataError("rules file has no version line");
  if (rules.version != "v1") {
    throw DataError("unsupported rules version \"" + rules.version + "\"");
  }
  return rules;
}

}  // namespace relpol::normalize
