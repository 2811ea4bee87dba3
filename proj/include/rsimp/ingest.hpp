#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rsimp {

struct RepoMeta {
  std::string repo_id;
  int64_t stars = 0;
  int64_t forks = 0;
  int64_t commit_count = 0;
  bool is_fork = false;
  std::optional<std::string> language;
};

struct CommitEvent {
  std::string sha;
  std::string message;
  std::vector<std::string> changed_paths;
  std::optional<std::string> readme_before;
  std::optional<std::string> readme_after;
  int64_t timestamp = 0;
};

/// One regular->simple README pair harvested from a qualifying commit.
struct DocumentPair {
  std::string repo_id;
  std::string sha;
  std::set<std::string> matched_keywords;
  std::string commit_message;
  std::optional<std::string> language;
  int64_t forks = 0;
  int64_t stars = 0;
  std::string difficult_doc;  // README before the commit
  std::string simple_doc;     // README after the commit

  bool operator==(const DocumentPair&) const = default;
};

/// Lowercased, duplicate-free keyword list; defaults to the 22 built-in
/// simplification keywords.
class KeywordSet {
 public:
  KeywordSet();
  explicit KeywordSet(const std::vector<std::string>& words);

  /// One keyword per line; '#' comments and blank lines ignored.
  static KeywordSet load(const std::string& path);

  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
};

bool repo_passes_filters(const RepoMeta& meta, int64_t min_stars = 10,
                         int64_t min_commits = 100);

/// Keywords matched by any word of the message. Words are the lowercased
/// message split on non-alphabetic characters; a word matches a keyword when
/// it equals it or extends it by at most three characters (catching -s/-ed/
/// -ing inflections without a stemmer).
std::set<std::string> keyword_match(const std::string& message,
                                    const KeywordSet& keywords);

/// Case-insensitive basename prefix "readme", any extension.
bool is_readme_path(const std::string& path);

/// Keyword present and every changed path is a README file.
bool is_simplification_commit(const CommitEvent& event, const KeywordSet& keywords);

/// First and last qualifying commit of one repository (0-2 pairs); empty when
/// the repository fails the star/commit filters. `history` must be in
/// chronological order. Qualifying commits additionally need both README
/// versions present and different.
std::vector<DocumentPair> harvest_repo(const RepoMeta& meta,
                                       const std::vector<CommitEvent>& history,
                                       const KeywordSet& keywords,
                                       int64_t min_stars = 10,
                                       int64_t min_commits = 100);

/// JSONL round trip. load_pairs reports malformed lines and missing fields
/// by line number / field name.
std::vector<DocumentPair> load_pairs(const std::string& path);
void store_pairs(const std::vector<DocumentPair>& pairs, const std::string& path);

struct HarvestFilters {
  int64_t min_stars = 10;
  int64_t min_commits = 100;
};

/// Harvest every git repository found directly under `dir_path` by invoking
/// the git executable (`git log --reverse` for history, `git show` for file
/// contents). Repository metadata (stars/forks/fork flag/language) is read
/// from an optional ghmeta.json in the repository root; absent metadata
/// defaults to zero stars. Output is sorted by (repo_id, sha). Unreadable
/// repositories produce a warning and are skipped.
std::vector<DocumentPair> scan_git_directory(const std::string& dir_path,
                                             const KeywordSet& keywords,
                                             const HarvestFilters& filters = {},
                                             std::vector<std::string>* warnings = nullptr);

}  // namespace rsimp
