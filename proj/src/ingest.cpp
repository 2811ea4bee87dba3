#include "rsimp/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rsimp/io.hpp"
#include "rsimp/textmetrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rsimp {

namespace {

const std::vector<std::string> kDefaultKeywords = {
    "simplification", "simplify",    "simple",       "simplicity",
    "reduction",      "reduce",      "clarification", "clarify",
    "clear",          "clarity",     "elucidation",  "elucidate",
    "elucidative",    "elucidatory", "explanation",  "explain",
    "explanatory",    "comprehension", "comprehend", "comprehensible",
    "ease",           "easy"};

}  // namespace

KeywordSet::KeywordSet() : KeywordSet(kDefaultKeywords) {}

KeywordSet::KeywordSet(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    std::string lower = to_lower(w);
    if (lower.empty()) continue;
    if (std::find(words_.begin(), words_.end(), lower) == words_.end())
      words_.push_back(std::move(lower));
  }
}

KeywordSet KeywordSet::load(const std::string& path) {
  std::vector<std::string> words;
  for (auto& line : read_lines(path)) {
    const size_t hash = line.find('#');
    std::string w = hash == std::string::npos ? line : line.substr(0, hash);
    w.erase(std::remove_if(w.begin(), w.end(),
                           [](char c) { return c == ' ' || c == '\t' || c == '\r'; }),
            w.end());
    if (!w.empty()) words.push_back(w);
  }
  return KeywordSet(words);
}

bool repo_passes_filters(const RepoMeta& meta, int64_t min_stars,
                         int64_t min_commits) {
  return !meta.is_fork && meta.stars >= min_stars &&
         meta.commit_count >= min_commits;
}

std::set<std::string> keyword_match(const std::string& message,
                                    const KeywordSet& keywords) {
  std::set<std::string> matched;
  const std::string lower = to_lower(message);

  std::vector<std::string> words;
  std::string current;
  for (char c : lower) {
    if (c >= 'a' && c <= 'z') {
      current.push_back(c);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(current);

  for (const auto& k : keywords.words()) {
    for (const auto& w : words) {
      const bool prefix = w.size() >= k.size() && w.size() <= k.size() + 3 &&
                          w.compare(0, k.size(), k) == 0;
      if (prefix) {
        matched.insert(k);
        break;
      }
    }
  }
  return matched;
}

bool is_readme_path(const std::string& path) {
  const size_t slash = path.find_last_of('/');
  const std::string base =
      to_lower(slash == std::string::npos ? path : path.substr(slash + 1));
  return base.rfind("readme", 0) == 0;
}

bool is_simplification_commit(const CommitEvent& event, const KeywordSet& keywords) {
  if (keyword_match(event.message, keywords).empty()) return false;
  return std::all_of(event.changed_paths.begin(), event.changed_paths.end(),
                     is_readme_path);
}

namespace {

DocumentPair make_pair(const RepoMeta& meta, const CommitEvent& event,
                       const KeywordSet& keywords) {
  DocumentPair pair;
  pair.repo_id = meta.repo_id;
  pair.sha = event.sha;
  pair.matched_keywords = keyword_match(event.message, keywords);
  pair.commit_message = event.message;
  pair.language = meta.language;
  pair.forks = meta.forks;
  pair.stars = meta.stars;
  pair.difficult_doc = *event.readme_before;
  pair.simple_doc = *event.readme_after;
  return pair;
}

}  // namespace

std::vector<DocumentPair> harvest_repo(const RepoMeta& meta,
                                       const std::vector<CommitEvent>& history,
                                       const KeywordSet& keywords,
                                       int64_t min_stars, int64_t min_commits) {
  if (!repo_passes_filters(meta, min_stars, min_commits)) return {};

  const CommitEvent* first = nullptr;
  const CommitEvent* last = nullptr;
  for (const auto& event : history) {
    if (!is_simplification_commit(event, keywords)) continue;
    if (!event.readme_before || !event.readme_after) continue;
    if (*event.readme_before == *event.readme_after) continue;
    if (!first) first = &event;
    last = &event;
  }
  if (!first) return {};

  std::vector<DocumentPair> pairs;
  pairs.push_back(make_pair(meta, *first, keywords));
  if (last != first) pairs.push_back(make_pair(meta, *last, keywords));
  return pairs;
}

// ---------------------------------------------------------------------------
// JSONL serialization

void store_pairs(const std::vector<DocumentPair>& pairs, const std::string& path) {
  std::ostringstream out;
  for (const auto& p : pairs) {
    json j;
    j["repo_id"] = p.repo_id;
    j["sha"] = p.sha;
    j["matched_keywords"] = p.matched_keywords;
    j["commit_message"] = p.commit_message;
    if (p.language)
      j["language"] = *p.language;
    else
      j["language"] = nullptr;
    j["forks"] = p.forks;
    j["stars"] = p.stars;
    j["difficult_doc"] = p.difficult_doc;
    j["simple_doc"] = p.simple_doc;
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

std::vector<DocumentPair> load_pairs(const std::string& path) {
  std::vector<DocumentPair> pairs;
  const auto lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                               ": malformed JSON line: " + e.what());
    }
    auto require = [&](const char* field) -> const json& {
      if (!j.contains(field))
        throw std::runtime_error(path + ":" + std::to_string(i + 1) +
                                 ": missing required field \"" + field + "\"");
      return j.at(field);
    };
    DocumentPair p;
    p.repo_id = require("repo_id").get<std::string>();
    p.sha = require("sha").get<std::string>();
    for (const auto& k : require("matched_keywords"))
      p.matched_keywords.insert(k.get<std::string>());
    p.commit_message = require("commit_message").get<std::string>();
    const json& lang = require("language");
    if (!lang.is_null()) p.language = lang.get<std::string>();
    p.forks = require("forks").get<int64_t>();
    p.stars = require("stars").get<int64_t>();
    p.difficult_doc = require("difficult_doc").get<std::string>();
    p.simple_doc = require("simple_doc").get<std::string>();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// local git scanning

namespace {

int git_in(const std::string& repo, const std::string& args, std::string* out) {
  return run_command("git -C " + shell_quote(repo) + " " + args + " 2>/dev/null",
                     out);
}

RepoMeta read_repo_meta(const fs::path& repo_dir) {
  RepoMeta meta;
  meta.repo_id = repo_dir.filename().string();
  const fs::path meta_path = repo_dir / "ghmeta.json";
  if (fs::exists(meta_path)) {
    const json j = json::parse(read_file(meta_path.string()));
    meta.stars = j.value("stars", int64_t{0});
    meta.forks = j.value("forks", int64_t{0});
    meta.is_fork = j.value("is_fork", false);
    if (j.contains("language") && !j.at("language").is_null())
      meta.language = j.at("language").get<std::string>();
  }
  return meta;
}

// history with messages and changed paths in one pass; record separator
// \x1e between commits, unit separator \x1f between fields
std::vector<CommitEvent> read_history(const std::string& repo) {
  std::string raw;
  if (git_in(repo, "log --reverse --format=%x1e%H%x1f%ct%x1f%B%x1f --name-only", &raw) != 0)
    throw std::runtime_error("git log failed");

  std::vector<CommitEvent> history;
  size_t pos = 0;
  while ((pos = raw.find('\x1e', pos)) != std::string::npos) {
    ++pos;
    const size_t end = raw.find('\x1e', pos);
    const std::string chunk =
        raw.substr(pos, (end == std::string::npos ? raw.size() : end) - pos);

    const size_t f1 = chunk.find('\x1f');
    const size_t f2 = chunk.find('\x1f', f1 + 1);
    const size_t f3 = chunk.find('\x1f', f2 + 1);
    if (f1 == std::string::npos || f2 == std::string::npos || f3 == std::string::npos)
      throw std::runtime_error("unexpected git log format");

    CommitEvent event;
    event.sha = chunk.substr(0, f1);
    event.timestamp = std::stoll(chunk.substr(f1 + 1, f2 - f1 - 1));
    event.message = chunk.substr(f2 + 1, f3 - f2 - 1);
    while (!event.message.empty() && event.message.back() == '\n')
      event.message.pop_back();

    std::istringstream names(chunk.substr(f3 + 1));
    std::string line;
    while (std::getline(names, line)) {
      if (!line.empty()) event.changed_paths.push_back(line);
    }
    history.push_back(std::move(event));
    pos = end;
    if (end == std::string::npos) break;
  }
  return history;
}

std::optional<std::string> git_file_at(const std::string& repo,
                                       const std::string& rev,
                                       const std::string& path) {
  std::string content;
  const int status = git_in(repo, "show " + shell_quote(rev + ":" + path), &content);
  if (status != 0) return std::nullopt;
  return content;
}

// root-level README preferred when a commit touches several
std::string pick_readme_path(const std::vector<std::string>& paths) {
  std::vector<std::string> sorted = paths;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& p : sorted)
    if (p.find('/') == std::string::npos) return p;
  return sorted.front();
}

}  // namespace

std::vector<DocumentPair> scan_git_directory(const std::string& dir_path,
                                             const KeywordSet& keywords,
                                             const HarvestFilters& filters,
                                             std::vector<std::string>* warnings) {
  if (run_command("git --version >/dev/null 2>&1", nullptr) != 0)
    throw std::runtime_error("git executable not found");
  if (!fs::is_directory(dir_path))
    throw std::runtime_error("not a directory: " + dir_path);

  std::vector<fs::path> repos;
  for (const auto& entry : fs::directory_iterator(dir_path))
    if (entry.is_directory()) repos.push_back(entry.path());
  std::sort(repos.begin(), repos.end());

  std::vector<DocumentPair> all;
  for (const auto& repo : repos) {
    try {
      if (!fs::exists(repo / ".git")) continue;
      RepoMeta meta = read_repo_meta(repo);

      std::string count_out;
      if (git_in(repo.string(), "rev-list --count HEAD", &count_out) != 0)
        throw std::runtime_error("rev-list failed");
      meta.commit_count = std::stoll(count_out);

      if (!repo_passes_filters(meta, filters.min_stars, filters.min_commits))
        continue;

      auto history = read_history(repo.string());
      // file contents are only fetched for commits that qualify by
      // message and paths
      for (auto& event : history) {
        if (!is_simplification_commit(event, keywords)) continue;
        const std::string path = pick_readme_path(event.changed_paths);
        event.readme_before = git_file_at(repo.string(), event.sha + "^", path);
        event.readme_after = git_file_at(repo.string(), event.sha, path);
      }

      auto pairs = harvest_repo(meta, history, keywords, filters.min_stars,
                                filters.min_commits);
      all.insert(all.end(), std::make_move_iterator(pairs.begin()),
                 std::make_move_iterator(pairs.end()));
    } catch (const std::exception& e) {
      if (warnings)
        warnings->push_back("skipping " + repo.string() + ": " + e.what());
    }
  }

  std::sort(all.begin(), all.end(), [](const DocumentPair& a, const DocumentPair& b) {
    return std::tie(a.repo_id, a.sha) < std::tie(b.repo_id, b.sha);
  });
  return all;
}

}  // namespace rsimp
