#include "rsimp/wordpiece.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rsimp/io.hpp"

namespace rsimp {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

// one UTF-8 code point starting at i (invalid bytes pass through singly)
size_t cp_len(const std::string& s, size_t i) {
  const auto b = static_cast<unsigned char>(s[i]);
  size_t len = 1;
  if ((b & 0xE0) == 0xC0) len = 2;
  else if ((b & 0xF0) == 0xE0) len = 3;
  else if ((b & 0xF8) == 0xF0) len = 4;
  if (i + len > s.size()) return 1;
  for (size_t k = 1; k < len; ++k)
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 1;
  return len;
}

std::vector<std::string> codepoints(const std::string& word) {
  std::vector<std::string> cps;
  size_t i = 0;
  while (i < word.size()) {
    const size_t len = cp_len(word, i);
    cps.push_back(word.substr(i, len));
    i += len;
  }
  return cps;
}

// runs of word bytes stay together, punctuation becomes one word per char
void split_punctuation(const std::string& piece, std::vector<std::string>& out) {
  size_t i = 0;
  while (i < piece.size()) {
    if (is_word_byte(static_cast<unsigned char>(piece[i]))) {
      size_t j = i;
      while (j < piece.size() && is_word_byte(static_cast<unsigned char>(piece[j])))
        ++j;
      out.push_back(piece.substr(i, j - i));
      i = j;
    } else {
      out.push_back(piece.substr(i, 1));
      ++i;
    }
  }
}

}  // namespace

const std::vector<std::string>& WordPieceModel::default_specials() {
  static const std::vector<std::string> specials = {
      "<sos>", "<eos>", "<UNK>", "<code_small>",
      "<code_large>", "<file>", "<table>", "<url>"};
  return specials;
}

void WordPieceModel::index_tokens() {
  token_to_id_.clear();
  max_token_len_ = 1;
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!token_to_id_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw std::runtime_error("duplicate token in vocabulary: " + tokens_[i]);
    max_token_len_ = std::max(max_token_len_, tokens_[i].size());
  }
}

std::vector<std::string> WordPieceModel::pretokenize(const std::string& text) const {
  std::vector<std::string> words;
  std::istringstream ss(text);
  std::string chunk;
  while (ss >> chunk) {
    // split off special tokens first so they stay atomic
    size_t pos = 0;
    while (pos < chunk.size()) {
      size_t best_at = std::string::npos;
      const std::string* best = nullptr;
      for (const auto& s : specials_) {
        const size_t at = chunk.find(s, pos);
        if (at != std::string::npos &&
            (best_at == std::string::npos || at < best_at ||
             (at == best_at && s.size() > best->size()))) {
          best_at = at;
          best = &s;
        }
      }
      if (!best) {
        split_punctuation(chunk.substr(pos), words);
        break;
      }
      if (best_at > pos) split_punctuation(chunk.substr(pos, best_at - pos), words);
      words.push_back(*best);
      pos = best_at + best->size();
    }
  }
  return words;
}

WordPieceModel WordPieceModel::train(const std::vector<std::string>& corpus,
                                     size_t vocab_size,
                                     std::vector<std::string> specials) {
  if (corpus.empty()) throw std::invalid_argument("wordpiece train: empty corpus");

  WordPieceModel model;
  model.specials_ = std::move(specials);
  model.tokens_ = model.specials_;
  model.index_tokens();  // also guards against duplicate specials

  // word frequencies in pre-token space; specials never merge
  std::map<std::string, long> word_freq;
  for (const auto& sentence : corpus) {
    for (auto& w : model.pretokenize(sentence)) {
      if (std::find(model.specials_.begin(), model.specials_.end(), w) !=
          model.specials_.end())
        continue;
      ++word_freq[w];
    }
  }

  // initial segmentation: characters, continuations prefixed "##"
  std::vector<std::vector<std::string>> segs;
  std::vector<long> freqs;
  std::set<std::string> alphabet;
  for (const auto& [word, freq] : word_freq) {
    auto cps = codepoints(word);
    std::vector<std::string> seg;
    for (size_t i = 0; i < cps.size(); ++i)
      seg.push_back(i == 0 ? cps[i] : "##" + cps[i]);
    for (const auto& s : seg) alphabet.insert(s);
    segs.push_back(std::move(seg));
    freqs.push_back(freq);
  }

  if (vocab_size <= model.specials_.size() + alphabet.size())
    throw std::invalid_argument(
        "wordpiece train: vocab_size must exceed specials plus alphabet (" +
        std::to_string(model.specials_.size() + alphabet.size()) + ")");

  for (const auto& s : alphabet) model.tokens_.push_back(s);

  while (model.tokens_.size() < vocab_size) {
    std::map<std::string, long> symbol_count;
    std::map<std::pair<std::string, std::string>, long> pair_count;
    for (size_t w = 0; w < segs.size(); ++w) {
      const auto& seg = segs[w];
      for (size_t i = 0; i < seg.size(); ++i) {
        symbol_count[seg[i]] += freqs[w];
        if (i + 1 < seg.size()) pair_count[{seg[i], seg[i + 1]}] += freqs[w];
      }
    }

    // best likelihood-ratio score; map order makes ties lexicographic
    std::pair<std::string, std::string> best_pair;
    double best_score = -1;
    bool found = false;
    for (const auto& [pair, count] : pair_count) {
      if (count < 2) continue;  // a pair seen once never generalizes
      const double score =
          static_cast<double>(count) /
          (static_cast<double>(symbol_count[pair.first]) *
           static_cast<double>(symbol_count[pair.second]));
      if (score > best_score) {
        best_score = score;
        best_pair = pair;
        found = true;
      }
    }
    if (!found) break;

    const std::string merged =
        best_pair.first + (best_pair.second.rfind("##", 0) == 0
                               ? best_pair.second.substr(2)
                               : best_pair.second);
    model.tokens_.push_back(merged);
    model.merges_.push_back(merged);

    for (auto& seg : segs) {
      std::vector<std::string> next;
      size_t i = 0;
      while (i < seg.size()) {
        if (i + 1 < seg.size() && seg[i] == best_pair.first &&
            seg[i + 1] == best_pair.second) {
          next.push_back(merged);
          i += 2;
        } else {
          next.push_back(seg[i]);
          ++i;
        }
      }
      seg = std::move(next);
    }
  }

  model.index_tokens();
  return model;
}

int WordPieceModel::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? -1 : it->second;
}

const std::string& WordPieceModel::token(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size())
    throw std::out_of_range("invalid token id: " + std::to_string(id));
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> WordPieceModel::encode(const std::string& text,
                                        bool add_bounds) const {
  std::vector<int> ids;
  if (add_bounds) ids.push_back(sos_id());

  for (const auto& word : pretokenize(text)) {
    const int special = id_of(word);
    if (special >= 0 &&
        std::find(specials_.begin(), specials_.end(), word) != specials_.end()) {
      ids.push_back(special);
      continue;
    }

    // greedy longest-match over code points
    const auto cps = codepoints(word);
    std::vector<int> word_ids;
    size_t pos = 0;
    bool ok = true;
    while (pos < cps.size()) {
      int match = -1;
      size_t match_len = 0;
      std::string prefix = pos == 0 ? "" : "##";
      std::string candidate;
      for (size_t end = pos; end < cps.size(); ++end) {
        candidate += cps[end];
        if (prefix.size() + candidate.size() > max_token_len_) break;
        const int id = id_of(prefix + candidate);
        if (id >= 0) {
          match = id;
          match_len = end - pos + 1;
        }
      }
      if (match < 0) {
        ok = false;
        break;
      }
      word_ids.push_back(match);
      pos += match_len;
    }
    if (ok)
      ids.insert(ids.end(), word_ids.begin(), word_ids.end());
    else
      ids.push_back(unk_id());
  }

  if (add_bounds) ids.push_back(eos_id());
  return ids;
}

std::string WordPieceModel::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    const std::string& tok = token(id);  // validates
    if (id == sos_id() || id == eos_id()) continue;
    if (tok.rfind("##", 0) == 0) {
      out += tok.substr(2);
    } else {
      if (!out.empty()) out.push_back(' ');
      out += tok;
    }
  }
  return out;
}

void WordPieceModel::save(const std::string& path) const {
  std::ostringstream out;
  for (const auto& t : tokens_) out << t << "\n";
  write_file(path, out.str());
}

WordPieceModel WordPieceModel::load(const std::string& path, size_t n_specials) {
  WordPieceModel model;
  for (auto& line : read_lines(path))
    if (!line.empty()) model.tokens_.push_back(line);
  if (model.tokens_.size() < n_specials)
    throw std::runtime_error("vocabulary file too small: " + path);
  model.specials_.assign(model.tokens_.begin(),
                         model.tokens_.begin() + static_cast<long>(n_specials));
  model.index_tokens();
  return model;
}

}  // namespace rsimp
