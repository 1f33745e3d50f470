#include "tripscale/session.hpp"

#include "tripscale/random.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <set>

namespace tripscale::service {
namespace {

nlohmann::json triplet_json(const Triplet& t) { return nlohmann::json::array({t.ref, t.opt1, t.opt2}); }

Triplet triplet_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("a triplet is [ref, opt1, opt2]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

std::vector<Triplet> triplets_from_json(const nlohmann::json& j) {
  std::vector<Triplet> out;
  for (const auto& t : j) out.push_back(triplet_from_json(t));
  return out;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "anon" : out.substr(0, 48);
}

Phase phase_at(const SessionState& s) {
  if (s.cursor >= s.sequence.size()) return Phase::kDone;
  return s.sequence[s.cursor].practice ? Phase::kPractice : Phase::kMain;
}

}  // namespace

void ScheduleConfig::validate() const {
  if (labels.size() < 3) throw std::invalid_argument("schedule needs at least 3 stimuli");
  if (!assets.empty() && assets.size() != labels.size())
    throw std::invalid_argument("schedule assets must be parallel to labels");
  if (main_triplets.empty()) throw std::invalid_argument("schedule has no main triplets");
  if (!(answer_timeout_ms > fixation_ms && fixation_ms > 0))
    throw std::invalid_argument("schedule needs timeout > fixation > 0");
  if (break_every == 0) throw std::invalid_argument("break_every must be >= 1");
  for (const auto& t : main_triplets) validate_triplet(t, labels.size());
  for (const auto& t : practice_triplets) validate_triplet(t, labels.size());
  const std::set<Triplet> main(main_triplets.begin(), main_triplets.end());
  for (const auto& t : practice_triplets)
    if (main.contains(t))
      throw std::invalid_argument("practice triplet " + canonical_triplet_id(t) + " also appears in the main set");
  if (repeat_block) {
    if (repeat_block->repeats < 1) throw std::invalid_argument("repeat block needs repeats >= 1");
    if (repeat_block->subset_size < 1 || repeat_block->subset_size > main_triplets.size())
      throw std::invalid_argument("repeat block subset exceeds the main triplet list");
  }
}

ScheduleConfig schedule_from_json(const nlohmann::json& j) {
  ScheduleConfig s;
  const auto& stimuli = j.at("stimuli");
  s.labels = stimuli.at("labels").get<std::vector<std::string>>();
  s.assets = stimuli.value("assets", std::vector<std::string>{});
  s.main_triplets = triplets_from_json(j.at("main_triplets"));
  if (j.contains("practice_triplets")) s.practice_triplets = triplets_from_json(j["practice_triplets"]);
  if (j.contains("repeat_block") && !j["repeat_block"].is_null()) {
    const auto& rb = j["repeat_block"];
    s.repeat_block = RepeatBlock{rb.value("subset_size", std::size_t{2000}), rb.value("repeats", 3),
                                 rb.value("shuffle", true)};
  }
  s.answer_timeout_ms = j.value("answer_timeout_ms", std::int64_t{4500});
  s.fixation_ms = j.value("fixation_ms", std::int64_t{300});
  s.break_every = j.value("break_every", std::size_t{200});
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

nlohmann::json to_json(const ScheduleConfig& s) {
  nlohmann::json main = nlohmann::json::array(), practice = nlohmann::json::array();
  for (const auto& t : s.main_triplets) main.push_back(triplet_json(t));
  for (const auto& t : s.practice_triplets) practice.push_back(triplet_json(t));
  nlohmann::json j{{"stimuli", {{"labels", s.labels}, {"assets", s.assets}}},
                   {"main_triplets", main},
                   {"practice_triplets", practice},
                   {"answer_timeout_ms", s.answer_timeout_ms},
                   {"fixation_ms", s.fixation_ms},
                   {"break_every", s.break_every},
                   {"seed", s.seed}};
  if (s.repeat_block)
    j["repeat_block"] = {{"subset_size", s.repeat_block->subset_size},
                         {"repeats", s.repeat_block->repeats},
                         {"shuffle", s.repeat_block->shuffle}};
  return j;
}

std::vector<ScheduledQuestion> expand_schedule(const ScheduleConfig& schedule) {
  std::vector<ScheduledQuestion> seq;
  for (const auto& t : schedule.practice_triplets) seq.push_back({t, true, std::nullopt});
  if (!schedule.repeat_block) {
    for (const auto& t : schedule.main_triplets) seq.push_back({t, false, std::nullopt});
    return seq;
  }
  const auto& rb = *schedule.repeat_block;
  const auto subset_end = schedule.main_triplets.begin() + static_cast<std::ptrdiff_t>(rb.subset_size);
  Rng rng(schedule.seed);
  for (int rep = 0; rep < rb.repeats; ++rep) {
    std::vector<Triplet> pass(schedule.main_triplets.begin(), subset_end);
    if (rb.shuffle) shuffle(pass.begin(), pass.end(), rng);
    for (const auto& t : pass) seq.push_back({t, false, rep});
  }
  for (auto it = subset_end; it != schedule.main_triplets.end(); ++it) seq.push_back({*it, false, std::nullopt});
  return seq;
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::kPractice: return "practice";
    case Phase::kMain: return "main";
    case Phase::kBreak: return "break";
    case Phase::kDone: return "done";
  }
  return "unknown";
}

std::size_t SessionState::practice_count() const {
  return static_cast<std::size_t>(
      std::count_if(sequence.begin(), sequence.end(), [](const ScheduledQuestion& q) { return q.practice; }));
}

nlohmann::json SessionState::to_json() const {
  nlohmann::json seq = nlohmann::json::array();
  for (const auto& q : sequence)
    seq.push_back({{"t", triplet_json(q.triplet)},
                   {"practice", q.practice},
                   {"repeat_index", q.repeat_index ? nlohmann::json(*q.repeat_index) : nlohmann::json()}});
  nlohmann::json resp = nlohmann::json::array();
  for (const auto& r : responses)
    resp.push_back({{"t", triplet_json(r.triplet)},
                    {"answer", answer_sign(r.answer)},
                    {"rt_ms", r.rt_ms ? nlohmann::json(*r.rt_ms) : nlohmann::json()}});
  return {{"session_id", session_id},
          {"participant_id", participant_id},
          {"phase", to_string(phase)},
          {"cursor", cursor},
          {"issued_at", issued_at ? nlohmann::json(*issued_at) : nlohmann::json()},
          {"breaks_shown", breaks_shown},
          {"responses", resp},
          {"sequence", seq},
          {"assets", assets},
          {"answer_timeout_ms", answer_timeout_ms},
          {"fixation_ms", fixation_ms},
          {"break_every", break_every}};
}

nlohmann::json NextResult::to_json(const std::string& session_id) const {
  switch (kind) {
    case NextKind::kDone:
      return {{"type", "done"},
              {"progress", {{"answered", answered}, {"total", total}}},
              {"export", "/sessions/" + session_id + "/export"}};
    case NextKind::kBreak:
      return {{"type", "break"}, {"phase", "break"}, {"progress", {{"answered", answered}, {"total", total}}}};
    case NextKind::kQuestion:
      break;
  }
  return {{"type", "question"},
          {"triplet_index", triplet_index},
          {"triplet", {{"ref", triplet.ref}, {"opt1", triplet.opt1}, {"opt2", triplet.opt2}}},
          {"assets", {{"ref", ref_asset}, {"opt1", opt1_asset}, {"opt2", opt2_asset}}},
          {"phase", to_string(phase)},
          {"progress", {{"answered", answered}, {"total", total}}},
          {"deadline_ms", deadline_ms},
          {"fixation_ms", fixation_ms}};
}

SessionManager::SessionManager(std::filesystem::path journal_dir, Clock clock)
    : dir_(std::move(journal_dir)), clock_(clock ? std::move(clock) : Clock(&SessionManager::wall_clock_ms)) {
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_))
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) replay(f);
}

std::int64_t SessionManager::wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void SessionManager::replay(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::string line;
  auto entry = std::make_shared<Entry>();
  bool created = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json event;
    try {
      event = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      break;  // torn final line from a crash mid-append
    }
    apply(entry->state, event);
    created = created || event.at("event") == "create";
  }
  if (!created) return;
  const auto& id = entry->state.session_id;
  if (id.size() > 1 && id[0] == 's') counter_ = std::max(counter_, std::stoul(id.substr(1, id.find('-') - 1)));
  sessions_[id] = std::move(entry);
}

void SessionManager::apply(SessionState& s, const nlohmann::json& e) {
  const auto kind = e.at("event").get<std::string>();
  if (kind == "create") {
    s.session_id = e.at("session_id").get<std::string>();
    s.participant_id = e.at("participant_id").get<std::string>();
    s.assets = e.at("assets").get<std::vector<std::string>>();
    s.answer_timeout_ms = e.at("answer_timeout_ms").get<std::int64_t>();
    s.fixation_ms = e.at("fixation_ms").get<std::int64_t>();
    s.break_every = e.at("break_every").get<std::size_t>();
    s.sequence.clear();
    for (const auto& q : e.at("sequence")) {
      ScheduledQuestion sq{triplet_from_json(q.at("t")), q.at("practice").get<bool>(), std::nullopt};
      if (!q.at("repeat_index").is_null()) sq.repeat_index = q["repeat_index"].get<int>();
      s.sequence.push_back(sq);
    }
    s.cursor = 0;
    s.responses.clear();
    s.issued_at.reset();
    s.breaks_shown.clear();
    s.phase = phase_at(s);
  } else if (kind == "issue") {
    s.issued_at = e.at("at").get<std::int64_t>();
    s.phase = phase_at(s);
  } else if (kind == "break") {
    s.breaks_shown.push_back(e.at("main_count").get<std::size_t>());
    s.phase = Phase::kBreak;
  } else if (kind == "resolve") {
    const auto& q = s.sequence.at(s.cursor);
    TripletResponse r;
    r.triplet = q.triplet;
    r.answer = static_cast<Answer>(e.at("answer").get<int>());
    if (!e.at("rt_ms").is_null()) r.rt_ms = e["rt_ms"].get<double>();
    r.session_id = s.session_id;
    r.repeat_index = q.repeat_index;
    s.responses.push_back(std::move(r));
    ++s.cursor;
    s.issued_at.reset();
    s.phase = phase_at(s);
  } else {
    throw std::runtime_error("unknown journal event '" + kind + "'");
  }
}

void SessionManager::append(const std::string& session_id, const nlohmann::json& event) const {
  const auto path = dir_ / (session_id + ".jsonl");
  const std::string line = event.dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot open journal " + path.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw std::runtime_error("journal write failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& session_id) const {
  std::shared_lock lock(map_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFound("unknown session '" + session_id + "'");
  return it->second;
}

std::string SessionManager::create_session(const std::string& participant_id, const ScheduleConfig& schedule) {
  schedule.validate();
  std::unique_lock lock(map_mutex_);
  for (const auto& [id, entry] : sessions_) {
    std::lock_guard guard(entry->mutex);
    if (entry->state.participant_id == participant_id && entry->state.phase != Phase::kDone)
      throw Conflict("participant '" + participant_id + "' already has an active session " + id);
  }
  char prefix[32];
  std::snprintf(prefix, sizeof prefix, "s%06zu-", ++counter_);
  const std::string id = prefix + sanitize(participant_id);

  nlohmann::json seq = nlohmann::json::array();
  for (const auto& q : expand_schedule(schedule))
    seq.push_back({{"t", triplet_json(q.triplet)},
                   {"practice", q.practice},
                   {"repeat_index", q.repeat_index ? nlohmann::json(*q.repeat_index) : nlohmann::json()}});
  std::vector<std::string> assets = schedule.assets;
  if (assets.empty()) assets = schedule.labels;
  const nlohmann::json event{{"event", "create"},
                             {"session_id", id},
                             {"participant_id", participant_id},
                             {"assets", assets},
                             {"answer_timeout_ms", schedule.answer_timeout_ms},
                             {"fixation_ms", schedule.fixation_ms},
                             {"break_every", schedule.break_every},
                             {"sequence", std::move(seq)},
                             {"at", clock_()}};
  auto entry = std::make_shared<Entry>();
  append(id, event);
  apply(entry->state, event);
  sessions_[id] = std::move(entry);
  return id;
}

NextResult SessionManager::next_question(const std::string& session_id) {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  auto& s = entry->state;
  const auto now = clock_();

  if (s.issued_at) {
    if (now - *s.issued_at <= s.answer_timeout_ms)
      throw Conflict("question " + std::to_string(s.cursor) + " is still awaiting an answer");
    // The client let the window lapse; register the question as unanswered.
    const nlohmann::json timeout{{"event", "resolve"}, {"answer", 0}, {"rt_ms", nullptr}, {"at", now}};
    append(session_id, timeout);
    apply(s, timeout);
  }

  NextResult out;
  out.total = s.sequence.size();
  out.answered = s.cursor;
  if (s.cursor >= s.sequence.size()) {
    out.kind = NextKind::kDone;
    out.phase = Phase::kDone;
    return out;
  }
  const auto& q = s.sequence[s.cursor];
  if (!q.practice) {
    const std::size_t main_count = s.cursor - s.practice_count();
    const bool shown = std::find(s.breaks_shown.begin(), s.breaks_shown.end(), main_count) != s.breaks_shown.end();
    if (main_count > 0 && main_count % s.break_every == 0 && !shown) {
      const nlohmann::json brk{{"event", "break"}, {"main_count", main_count}, {"at", now}};
      append(session_id, brk);
      apply(s, brk);
      out.kind = NextKind::kBreak;
      out.phase = Phase::kBreak;
      return out;
    }
  }
  const nlohmann::json issue{{"event", "issue"}, {"index", s.cursor}, {"at", now}};
  append(session_id, issue);
  apply(s, issue);
  out.kind = NextKind::kQuestion;
  out.triplet_index = s.cursor;
  out.triplet = q.triplet;
  out.ref_asset = s.assets.at(q.triplet.ref);
  out.opt1_asset = s.assets.at(q.triplet.opt1);
  out.opt2_asset = s.assets.at(q.triplet.opt2);
  out.phase = s.phase;
  out.deadline_ms = s.answer_timeout_ms;
  out.fixation_ms = s.fixation_ms;
  return out;
}

RecordResult SessionManager::record_answer(const std::string& session_id, std::size_t triplet_index,
                                           Choice choice, std::optional<double> client_rt_ms) {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  auto& s = entry->state;
  if (!s.issued_at) throw Conflict("no question is outstanding");
  if (triplet_index != s.cursor)
    throw Conflict("answer for question " + std::to_string(triplet_index) + " but question " +
                   std::to_string(s.cursor) + " is outstanding");
  const auto now = clock_();
  const auto elapsed = now - *s.issued_at;
  RecordResult out;
  if (elapsed > s.answer_timeout_ms) {
    out.answer = Answer::kUnanswered;
  } else {
    out.answer = choice == Choice::kOpt1 ? Answer::kOpt1 : Answer::kOpt2;
    const double server_rt = static_cast<double>(std::max<std::int64_t>(elapsed, 0));
    out.rt_ms = client_rt_ms ? std::clamp(*client_rt_ms, 0.0, server_rt) : server_rt;
  }
  const nlohmann::json event{{"event", "resolve"},
                             {"answer", answer_sign(out.answer)},
                             {"rt_ms", out.rt_ms ? nlohmann::json(*out.rt_ms) : nlohmann::json()},
                             {"at", now}};
  append(session_id, event);
  apply(s, event);
  return out;
}

Responses SessionManager::export_responses(const std::string& session_id, const ExportOptions& options) const {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  const auto& s = entry->state;
  Responses out;
  for (std::size_t i = 0; i < s.responses.size(); ++i) {
    if (s.sequence[i].practice && !options.include_practice) continue;
    if (!s.responses[i].answered() && options.drop_unanswered) continue;
    out.push_back(s.responses[i]);
  }
  return out;
}

SessionState SessionManager::snapshot(const std::string& session_id) const {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  return entry->state;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, entry] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace tripscale::service
