#pragma once

#include "tripscale/core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace tripscale::service {

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Conflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RepeatBlock {
  std::size_t subset_size = 2000;
  int repeats = 3;
  bool shuffle = true;
};

struct ScheduleConfig {
  std::vector<std::string> labels;
  /// Asset reference (URL or path) per stimulus, parallel to labels.
  std::vector<std::string> assets;
  std::vector<Triplet> main_triplets;
  std::vector<Triplet> practice_triplets;
  std::optional<RepeatBlock> repeat_block;
  std::int64_t answer_timeout_ms = 4500;
  std::int64_t fixation_ms = 300;
  std::size_t break_every = 200;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

ScheduleConfig schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScheduleConfig& s);

/// One slot of the expanded question sequence.
struct ScheduledQuestion {
  Triplet triplet;
  bool practice = false;
  std::optional<int> repeat_index;
};

/// Practice questions followed by the main sequence. With a repeat block the
/// first subset_size main triplets are asked `repeats` times, each pass
/// independently shuffled, followed by any remaining main triplets.
std::vector<ScheduledQuestion> expand_schedule(const ScheduleConfig& schedule);

enum class Phase { kPractice, kMain, kBreak, kDone };
std::string to_string(Phase p);

struct SessionState {
  std::string session_id;
  std::string participant_id;
  Phase phase = Phase::kPractice;
  std::size_t cursor = 0;
  Responses responses;  // aligned with sequence[0..cursor)
  std::optional<std::int64_t> issued_at;
  /// Main-phase counts at which a break notice has already been shown.
  std::vector<std::size_t> breaks_shown;

  std::vector<ScheduledQuestion> sequence;
  std::vector<std::string> assets;
  std::int64_t answer_timeout_ms = 4500;
  std::int64_t fixation_ms = 300;
  std::size_t break_every = 200;

  std::size_t practice_count() const;
  /// Canonical JSON of the whole state, used to compare replayed sessions.
  nlohmann::json to_json() const;
};

enum class NextKind { kQuestion, kBreak, kDone };

struct NextResult {
  NextKind kind = NextKind::kQuestion;
  std::size_t triplet_index = 0;
  Triplet triplet;
  std::string ref_asset, opt1_asset, opt2_asset;
  Phase phase = Phase::kPractice;
  std::size_t answered = 0;  // resolved so far
  std::size_t total = 0;
  std::int64_t deadline_ms = 0;
  std::int64_t fixation_ms = 0;

  nlohmann::json to_json(const std::string& session_id) const;
};

enum class Choice { kOpt1, kOpt2 };

struct RecordResult {
  Answer answer = Answer::kUnanswered;
  std::optional<double> rt_ms;
};

struct ExportOptions {
  bool include_practice = false;
  bool drop_unanswered = false;
};

/// Runs participant sessions and journals every event to
/// `<journal_dir>/<session_id>.jsonl` (one JSON object per line, fsync'd).
/// Constructing a manager over an existing directory replays the journals.
class SessionManager {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit SessionManager(std::filesystem::path journal_dir, Clock clock = {});

  std::string create_session(const std::string& participant_id, const ScheduleConfig& schedule);
  NextResult next_question(const std::string& session_id);
  RecordResult record_answer(const std::string& session_id, std::size_t triplet_index, Choice choice,
                             std::optional<double> client_rt_ms);
  Responses export_responses(const std::string& session_id, const ExportOptions& options = {}) const;

  SessionState snapshot(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  static std::int64_t wall_clock_ms();

 private:
  struct Entry {
    mutable std::mutex mutex;
    SessionState state;
  };

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  void append(const std::string& session_id, const nlohmann::json& event) const;
  void replay(const std::filesystem::path& file);
  static void apply(SessionState& state, const nlohmann::json& event);

  std::filesystem::path dir_;
  Clock clock_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t counter_ = 0;
};

}  // namespace tripscale::service
