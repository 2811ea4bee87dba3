#include "rsimp/mask.hpp"

#include <algorithm>
#include <cstdint>

namespace rsimp {

namespace {

const std::array<std::string, 5> kSurfaces = {
    "<code_small>", "<code_large>", "<file>", "<table>", "<url>"};

bool is_emoji(uint32_t cp) {
  return (cp >= 0x1F300 && cp <= 0x1F5FF) ||  // misc symbols & pictographs
         (cp >= 0x1F600 && cp <= 0x1F64F) ||  // emoticons
         (cp >= 0x1F680 && cp <= 0x1F6FF) ||  // transport & map
         (cp >= 0x1F900 && cp <= 0x1F9FF) ||  // supplemental symbols
         (cp >= 0xFE00 && cp <= 0xFE0F);      // variation selectors
}

// Decodes one UTF-8 code point at `i`; returns its byte length (1 on invalid
// input, which is passed through untouched).
size_t decode_utf8(const std::string& s, size_t i, uint32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  size_t len = 0;
  if ((b0 & 0xE0) == 0xC0) {
    cp = b0 & 0x1F;
    len = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    cp = b0 & 0x0F;
    len = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    cp = b0 & 0x07;
    len = 4;
  } else {
    cp = b0;
    return 1;
  }
  if (i + len > s.size()) {
    cp = b0;
    return 1;
  }
  for (size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = b0;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

bool ieq(char a, char b) {
  auto lower = [](char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  };
  return lower(a) == lower(b);
}

bool starts_with_ci(const std::string& s, size_t pos, const std::string& prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (size_t k = 0; k < prefix.size(); ++k)
    if (!ieq(s[pos + k], prefix[k])) return false;
  return true;
}

size_t find_ci(const std::string& s, size_t pos, const std::string& needle) {
  for (size_t i = pos; i + needle.size() <= s.size(); ++i)
    if (starts_with_ci(s, i, needle)) return i;
  return std::string::npos;
}

bool is_ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

constexpr const char* kLeadTrim = "([{<'\"";
constexpr const char* kTailTrim = ")]}>.,;:!?'\"";

// ---------------------------------------------------------------------------
// masking emitter: walks the input once, building masked text and spans

class Emitter {
 public:
  explicit Emitter(const std::string& in) : in_(in) {}

  MaskedDocument run() {
    while (pos_ < in_.size()) {
      if (at_line_start_ && block_step()) continue;
      inline_line();
    }
    MaskedDocument doc;
    doc.text = std::move(out_);
    doc.spans = std::move(spans_);
    doc.warnings = std::move(warnings_);
    return doc;
  }

 private:
  const std::string& in_;
  std::string out_;
  std::vector<MaskSpan> spans_;
  std::vector<std::string> warnings_;
  size_t pos_ = 0;
  bool at_line_start_ = true;

  void copy(size_t n) {
    for (size_t k = 0; k < n && pos_ < in_.size(); ++k) {
      at_line_start_ = in_[pos_] == '\n';
      out_.push_back(in_[pos_++]);
    }
  }

  void emit_mask(MaskToken token, size_t original_len) {
    MaskSpan span;
    span.token = token;
    span.original = in_.substr(pos_, original_len);
    span.char_offset = out_.size();
    out_ += mask_surface(token);
    spans_.push_back(std::move(span));
    pos_ += original_len;
    at_line_start_ = false;
  }

  size_t line_end(size_t from) const {
    const size_t nl = in_.find('\n', from);
    return nl == std::string::npos ? in_.size() : nl;
  }

  size_t leading_spaces(size_t from) const {
    size_t n = 0;
    while (from + n < in_.size() && in_[from + n] == ' ') ++n;
    return n;
  }

  // fenced code / indented code / pipe table at a line start.
  // Returns true when a block was consumed.
  bool block_step() {
    const size_t indent = leading_spaces(pos_);
    const size_t end = line_end(pos_);

    if (indent <= 3 && try_fence(indent, end)) return true;
    if (indent >= 4 && pos_ + indent < end) {
      consume_indented_block();
      return true;
    }
    if (try_pipe_table(end)) return true;
    return false;
  }

  bool try_fence(size_t indent, size_t end) {
    const size_t start = pos_ + indent;
    if (start >= end) return false;
    const char fence_char = in_[start];
    if (fence_char != '`' && fence_char != '~') return false;
    size_t run = 0;
    while (start + run < end && in_[start + run] == fence_char) ++run;
    if (run < 3) return false;

    // closing fence: a later line of >= run fence chars and nothing else
    size_t scan = end == in_.size() ? end : end + 1;
    while (scan < in_.size()) {
      const size_t scan_end = line_end(scan);
      size_t i = scan + leading_spaces(scan);
      size_t close_run = 0;
      while (i + close_run < scan_end && in_[i + close_run] == fence_char) ++close_run;
      bool only_fence = close_run >= run;
      for (size_t k = i + close_run; only_fence && k < scan_end; ++k)
        if (in_[k] != ' ') only_fence = false;
      if (only_fence) {
        emit_mask(MaskToken::CodeLarge, scan_end - pos_);
        return true;
      }
      scan = scan_end == in_.size() ? scan_end : scan_end + 1;
    }
    warnings_.push_back("unterminated code fence; masking rest of document");
    emit_mask(MaskToken::CodeLarge, in_.size() - pos_);
    return true;
  }

  void consume_indented_block() {
    size_t block_end = line_end(pos_);
    size_t scan = block_end == in_.size() ? block_end : block_end + 1;
    while (scan < in_.size() && leading_spaces(scan) >= 4 &&
           scan + leading_spaces(scan) < line_end(scan)) {
      block_end = line_end(scan);
      scan = block_end == in_.size() ? block_end : block_end + 1;
    }
    emit_mask(MaskToken::CodeLarge, block_end - pos_);
  }

  bool is_pipe_delimiter_row(size_t from, size_t to) const {
    int dashes = 0;
    bool ok = from < to;
    for (size_t i = from; i < to; ++i) {
      const char c = in_[i];
      if (c == '-')
        ++dashes;
      else if (c != '|' && c != ':' && c != ' ')
        ok = false;
    }
    return ok && dashes >= 3;
  }

  bool try_pipe_table(size_t end) {
    if (in_.find('|', pos_) == std::string::npos ||
        in_.find('|', pos_) >= end || end >= in_.size())
      return false;
    const size_t next = end + 1;
    const size_t next_end = line_end(next);
    if (!is_pipe_delimiter_row(next, next_end)) return false;

    size_t block_end = next_end;
    size_t scan = next_end == in_.size() ? next_end : next_end + 1;
    while (scan < in_.size()) {
      const size_t scan_end = line_end(scan);
      const size_t bar = in_.find('|', scan);
      if (bar == std::string::npos || bar >= scan_end) break;
      block_end = scan_end;
      scan = scan_end == in_.size() ? scan_end : scan_end + 1;
    }
    emit_mask(MaskToken::Table, block_end - pos_);
    return true;
  }

  // -- inline handling ------------------------------------------------------

  void inline_line() {
    while (pos_ < in_.size()) {
      const char c = in_[pos_];
      if (c == '\n') {
        copy(1);
        return;
      }
      if (c == '`' && try_inline_code()) continue;
      if (c == '<' && try_html_table()) continue;
      if (c == '<' && try_literal_token()) continue;
      if (c == '<' && try_autolink()) continue;
      if (c == ']' && try_link_target()) continue;
      if ((c == 'h' || c == 'H') && try_bare_url()) continue;
      if (word_start() && try_file_path()) continue;
      copy(1);
    }
  }

  bool try_inline_code() {
    size_t run = 0;
    while (pos_ + run < in_.size() && in_[pos_ + run] == '`') ++run;
    const size_t end = line_end(pos_);
    // closing run of exactly the same length, within the line
    size_t i = pos_ + run;
    while (i < end) {
      if (in_[i] == '`') {
        size_t close = 0;
        while (i + close < end && in_[i + close] == '`') ++close;
        if (close == run) {
          emit_mask(MaskToken::CodeSmall, i + close - pos_);
          return true;
        }
        i += close;
      } else {
        ++i;
      }
    }
    return false;
  }

  bool try_html_table() {
    if (!starts_with_ci(in_, pos_, "<table")) return false;
    const size_t close = find_ci(in_, pos_, "</table>");
    if (close == std::string::npos) return false;
    emit_mask(MaskToken::Table, close + 8 - pos_);
    return true;
  }

  bool try_literal_token() {
    for (const auto& surface : kSurfaces) {
      if (in_.compare(pos_, surface.size(), surface) == 0) {
        MaskToken token = MaskToken::CodeSmall;
        for (auto t : all_mask_tokens())
          if (mask_surface(t) == surface) token = t;
        emit_mask(token, surface.size());
        return true;
      }
    }
    return false;
  }

  bool try_autolink() {
    if (!starts_with_ci(in_, pos_, "<http://") && !starts_with_ci(in_, pos_, "<https://"))
      return false;
    const size_t end = line_end(pos_);
    const size_t close = in_.find('>', pos_);
    if (close == std::string::npos || close >= end) return false;
    emit_mask(MaskToken::Url, close + 1 - pos_);
    return true;
  }

  // at "](", mask the link destination (up to an unnested ')' or a space)
  bool try_link_target() {
    if (in_.compare(pos_, 2, "](") != 0) return false;
    const size_t end = line_end(pos_);
    size_t i = pos_ + 2;
    int depth = 0;
    while (i < end) {
      const char c = in_[i];
      if (c == '(')
        ++depth;
      else if (c == ')') {
        if (depth == 0) break;
        --depth;
      } else if (c == ' ')
        break;
      ++i;
    }
    if (i >= end || i == pos_ + 2) return false;  // unclosed or empty target
    copy(2);
    emit_mask(MaskToken::Url, i - pos_);
    return true;
  }

  bool try_bare_url() {
    if (!starts_with_ci(in_, pos_, "http://") && !starts_with_ci(in_, pos_, "https://"))
      return false;
    size_t i = pos_;
    while (i < in_.size() && in_[i] != ' ' && in_[i] != '\n' && in_[i] != '\t') ++i;
    while (i > pos_ && std::string(kTailTrim).find(in_[i - 1]) != std::string::npos)
      --i;
    emit_mask(MaskToken::Url, i - pos_);
    return true;
  }

  bool word_start() const {
    if (pos_ == 0) return true;
    const char prev = in_[pos_ - 1];
    return prev == ' ' || prev == '\n' ||
           std::string(kLeadTrim).find(prev) != std::string::npos;
  }

  static bool path_safe(const std::string& s) {
    for (char c : s) {
      const bool ok = is_ascii_alpha(c) || (c >= '0' && c <= '9') || c == '.' ||
                      c == '/' || c == '_' || c == '-' || c == '~' || c == '+';
      if (!ok) return false;
    }
    return true;
  }

  // conservative path rule: explicit "./", "~/" or "/" prefix, or a slash
  // plus a dotted segment or trailing slash
  static bool looks_like_path(const std::string& core) {
    if (core.size() < 2 || !path_safe(core)) return false;
    if (core.find('/') == std::string::npos) return false;
    if (core.rfind("./", 0) == 0 || core.rfind("~/", 0) == 0 || core[0] == '/')
      return true;
    if (core.back() == '/') return true;
    size_t start = 0;
    while (start <= core.size()) {
      const size_t slash = core.find('/', start);
      const std::string segment =
          core.substr(start, (slash == std::string::npos ? core.size() : slash) - start);
      if (segment.find('.') != std::string::npos && segment != "." && segment != "..")
        return true;
      if (slash == std::string::npos) break;
      start = slash + 1;
    }
    return false;
  }

  bool try_file_path() {
    size_t word_end = pos_;
    while (word_end < in_.size() && in_[word_end] != ' ' && in_[word_end] != '\n' &&
           in_[word_end] != '\t')
      ++word_end;
    size_t core_end = word_end;
    while (core_end > pos_ &&
           std::string(kTailTrim).find(in_[core_end - 1]) != std::string::npos)
      --core_end;
    const std::string core = in_.substr(pos_, core_end - pos_);
    if (!looks_like_path(core)) return false;
    emit_mask(MaskToken::File, core.size());
    return true;
  }
};

}  // namespace

const std::string& mask_surface(MaskToken token) {
  return kSurfaces[static_cast<size_t>(token)];
}

const std::array<MaskToken, 5>& all_mask_tokens() {
  static const std::array<MaskToken, 5> tokens = {
      MaskToken::CodeSmall, MaskToken::CodeLarge, MaskToken::File,
      MaskToken::Table, MaskToken::Url};
  return tokens;
}

bool is_mask_token_word(const std::string& word) {
  size_t end = word.size();
  while (end > 0 && std::string(kTailTrim).find(word[end - 1]) != std::string::npos &&
         word[end - 1] != '>')
    --end;
  const std::string core = word.substr(0, end);
  return std::find(kSurfaces.begin(), kSurfaces.end(), core) != kSurfaces.end();
}

std::string clean(const std::string& text) {
  // pass 1: drop emoji, map tab/cr to spaces
  std::string flat;
  flat.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    uint32_t cp = 0;
    const size_t len = decode_utf8(text, i, cp);
    if (is_emoji(cp)) {
      i += len;
      continue;
    }
    if (cp == '\t' || cp == '\r') {
      flat.push_back(' ');
      ++i;
      continue;
    }
    flat.append(text, i, len);
    i += len;
  }

  // pass 2: per line, keep leading indentation, collapse interior space runs,
  // strip trailing spaces; whitespace-only lines vanish so newline runs
  // normalize to a single '\n'
  std::string out;
  out.reserve(flat.size());
  size_t start = 0;
  bool pending_newline = false;
  bool first_line_written = false;
  while (start <= flat.size()) {
    size_t nl = flat.find('\n', start);
    const size_t end = nl == std::string::npos ? flat.size() : nl;

    std::string line;
    size_t p = start;
    while (p < end && flat[p] == ' ') line.push_back(flat[p++]);
    bool prev_space = false;
    for (; p < end; ++p) {
      if (flat[p] == ' ') {
        if (!prev_space) line.push_back(' ');
        prev_space = true;
      } else {
        line.push_back(flat[p]);
        prev_space = false;
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();

    const bool blank = line.find_first_not_of(' ') == std::string::npos;
    if (!blank) {
      if (pending_newline && first_line_written) out.push_back('\n');
      out += line;
      first_line_written = true;
      pending_newline = false;
    }
    if (nl == std::string::npos) break;
    pending_newline = true;
    start = nl + 1;
  }
  if (pending_newline && first_line_written) out.push_back('\n');
  return out;
}

MaskedDocument mask(const std::string& markdown) {
  Emitter emitter(markdown);
  return emitter.run();
}

std::string reconstruct(const MaskedDocument& doc) {
  std::string out;
  size_t cursor = 0;
  for (const auto& span : doc.spans) {
    out.append(doc.text, cursor, span.char_offset - cursor);
    out += span.original;
    cursor = span.char_offset + mask_surface(span.token).size();
  }
  out.append(doc.text, cursor, doc.text.size() - cursor);
  return out;
}

namespace {

bool is_list_item(const std::string& line) {
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') &&
      line[1] == ' ')
    return true;
  size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  return i > 0 && i + 1 < line.size() && (line[i] == '.' || line[i] == ')') &&
         line[i + 1] == ' ';
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// "a. b" style boundaries plus <br> variants; returns pieces of one line
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> parts;
  std::string current;
  size_t i = 0;
  while (i < line.size()) {
    for (const char* br : {"<br/>", "<br />", "<br>"}) {
      const size_t n = std::char_traits<char>::length(br);
      if (starts_with_ci(line, i, br)) {
        current.append(line, i, n);
        parts.push_back(current);
        current.clear();
        i += n;
        goto next;
      }
    }
    current.push_back(line[i]);
    if ((line[i] == '.' || line[i] == '!' || line[i] == '?') &&
        i + 1 < line.size() && line[i + 1] == ' ') {
      parts.push_back(current);
      current.clear();
      ++i;  // swallow the separating space
    }
    ++i;
  next:;
  }
  if (!current.empty()) parts.push_back(current);
  return parts;
}

}  // namespace

std::vector<MaskedSentence> split_sentences(const std::string& masked_text) {
  std::vector<MaskedSentence> out;
  size_t start = 0;
  while (start <= masked_text.size()) {
    const size_t nl = masked_text.find('\n', start);
    const size_t end = nl == std::string::npos ? masked_text.size() : nl;
    const std::string line = trim(masked_text.substr(start, end - start));
    if (!line.empty()) {
      if (line[0] == '#' || is_list_item(line)) {
        out.push_back({line, static_cast<int>(out.size())});
      } else {
        for (const auto& part : split_line(line)) {
          const std::string piece = trim(part);
          if (!piece.empty()) out.push_back({piece, static_cast<int>(out.size())});
        }
      }
    }
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

std::vector<MaskedSentence> split_sentences(const MaskedDocument& doc) {
  return split_sentences(doc.text);
}

int alphabetic_word_count(const std::string& sentence) {
  int count = 0;
  size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && (sentence[i] == ' ' || sentence[i] == '\n' ||
                                   sentence[i] == '\t'))
      ++i;
    size_t start = i;
    while (i < sentence.size() && sentence[i] != ' ' && sentence[i] != '\n' &&
           sentence[i] != '\t')
      ++i;
    if (i == start) break;
    const std::string word = sentence.substr(start, i - start);
    if (is_mask_token_word(word)) continue;
    if (std::any_of(word.begin(), word.end(), is_ascii_alpha)) ++count;
  }
  return count;
}

}  // namespace rsimp
