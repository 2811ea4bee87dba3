#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace rsimp {

/// The five placeholder tokens for context-dependent README components.
enum class MaskToken { CodeSmall, CodeLarge, File, Table, Url };

const std::string& mask_surface(MaskToken token);
const std::array<MaskToken, 5>& all_mask_tokens();

/// True when `word` is exactly one of the five surface forms
/// (trailing sentence punctuation ignored).
bool is_mask_token_word(const std::string& word);

struct MaskSpan {
  MaskToken token;
  std::string original;
  size_t char_offset = 0;  // byte offset of the token occurrence in the masked text
};

struct MaskedDocument {
  std::string text;
  std::vector<MaskSpan> spans;
  std::vector<std::string> warnings;
};

struct MaskedSentence {
  std::string text;
  int doc_position = 0;  // 0-based sentence index within the document
};

/// Remove emoji code points, replace '\t'/'\r' by spaces, collapse interior
/// space runs (line-leading indentation is kept for code-block detection),
/// strip trailing spaces and collapse newline runs to a single '\n'.
std::string clean(const std::string& text);

/// Replace code spans/blocks, tables, hyperlink targets and path-like tokens
/// by their placeholder tokens, recording every replacement. Literal
/// occurrences of the placeholders themselves are recorded as self-spans so
/// that the occurrence/span correspondence holds for arbitrary input.
/// An unterminated code fence masks the rest of the document and is reported
/// in `warnings`.
MaskedDocument mask(const std::string& markdown);

/// Substitute the recorded originals back; inverse of mask().
std::string reconstruct(const MaskedDocument& doc);

/// Newline- and punctuation-based sentence split; headers and list items are
/// kept whole. Never yields empty sentences.
std::vector<MaskedSentence> split_sentences(const MaskedDocument& doc);
std::vector<MaskedSentence> split_sentences(const std::string& masked_text);

/// Whitespace-separated words containing at least one ASCII letter;
/// placeholder tokens do not count.
int alphabetic_word_count(const std::string& sentence);

}  // namespace rsimp
