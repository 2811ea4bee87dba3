#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace rsimp {

/// Subword vocabulary with "##" continuation convention and atomic special
/// tokens. Ids are dense, specials come first.
class WordPieceModel {
 public:
  /// <sos>, <eos>, <UNK> plus the five mask placeholders.
  static const std::vector<std::string>& default_specials();

  /// Iterative merge training. Starts from single characters (word-internal
  /// ones prefixed "##") and repeatedly merges the adjacent pair maximizing
  /// count(ab) / (count(a) * count(b)) until the vocabulary is full or no
  /// pair occurs twice. Ties break toward the lexicographically smallest
  /// pair. Throws std::invalid_argument when vocab_size cannot hold the
  /// specials plus the alphabet.
  static WordPieceModel train(const std::vector<std::string>& corpus,
                              size_t vocab_size,
                              std::vector<std::string> specials = default_specials());

  static WordPieceModel load(const std::string& path, size_t n_specials = 8);
  void save(const std::string& path) const;  // one token per line, id = line

  /// Greedy longest-match segmentation per word; a word that cannot be
  /// segmented becomes a single <UNK>. Special tokens are split off before
  /// word segmentation and always map to their own id.
  std::vector<int> encode(const std::string& text, bool add_bounds) const;

  /// Inverse of encode up to whitespace normalization: "##" continuations
  /// are concatenated, bounds tokens dropped. Throws on an invalid id.
  std::string decode(const std::vector<int>& ids) const;

  /// Whitespace split, specials split off atomically, punctuation split into
  /// separate words.
  std::vector<std::string> pretokenize(const std::string& text) const;

  size_t size() const { return tokens_.size(); }
  int id_of(const std::string& token) const;  // -1 when absent
  const std::string& token(int id) const;
  int sos_id() const { return 0; }
  int eos_id() const { return 1; }
  int unk_id() const { return 2; }
  const std::vector<std::string>& specials() const { return specials_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Merged tokens in creation order (training provenance, useful in tests).
  const std::vector<std::string>& merges() const { return merges_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::string> specials_;
  std::vector<std::string> merges_;
  std::unordered_map<std::string, int> token_to_id_;
  size_t max_token_len_ = 1;

  void index_tokens();
};

}  // namespace rsimp
