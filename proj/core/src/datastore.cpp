#include "smarttoy/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace smarttoy {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::ordered_json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw InputError("write failed for " + path.string());
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(what + ": " + e.what());
  }
}

bool safe_component(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
  });
}

Json ts_list(const std::vector<Timestamp>& ts) {
  Json arr = Json::array();
  for (auto t : ts) arr.push_back(t.millis);
  return arr;
}

Json alert_record_json(const AlertRecord& r) {
  Json j;
  j["ts"] = r.alert.ts.millis;
  j["child"] = r.alert.child.id;
  j["kind"] = std::string(to_string(r.alert.kind));
  j["severity"] = std::string(to_string(r.alert.severity));
  j["count"] = r.alert.count;
  j["span_ms"] = r.alert.span_ms;
  j["evidence"] = ts_list(r.alert.evidence);
  j["message"] = r.alert.message;
  j["status"] = std::string(to_string(r.status));
  j["dispatched_at"] = r.dispatched_at ? Json(r.dispatched_at->millis) : Json(nullptr);
  Json results = Json::array();
  for (const auto& t : r.transport_results) results.push_back({{"transport", t.transport}, {"ok", t.ok}});
  j["transport_results"] = std::move(results);
  return j;
}

AlertRecord alert_record_from(const Json& j) {
  AlertRecord r;
  try {
    r.alert.ts.millis = j.at("ts").get<std::int64_t>();
    r.alert.child.id = j.at("child").get<std::string>();
    auto kind = parse_pattern_kind(j.at("kind").get<std::string>());
    if (!kind) throw InputError("alerts.log: unknown pattern kind");
    r.alert.kind = *kind;
    const auto sev = j.at("severity").get<std::string>();
    if (sev != "warning" && sev != "critical") throw InputError("alerts.log: unknown severity");
    r.alert.severity = sev == "critical" ? Severity::Critical : Severity::Warning;
    r.alert.count = j.at("count").get<std::int64_t>();
    r.alert.span_ms = j.at("span_ms").get<std::int64_t>();
    for (const auto& t : j.at("evidence")) r.alert.evidence.push_back({t.get<std::int64_t>()});
    r.alert.message = j.at("message").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status == "delivered") {
      r.status = DispatchStatus::Delivered;
    } else if (status == "suppressed") {
      r.status = DispatchStatus::Suppressed;
    } else if (status == "queued") {
      r.status = DispatchStatus::Queued;
    } else {
      throw InputError("alerts.log: unknown status " + status);
    }
    if (!j.at("dispatched_at").is_null()) r.dispatched_at = Timestamp{j["dispatched_at"].get<std::int64_t>()};
    for (const auto& t : j.at("transport_results")) {
      r.transport_results.push_back({t.at("transport").get<std::string>(), t.at("ok").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("alerts.log: ") + e.what());
  }
  return r;
}

Json summary_json(const PredictionSummary& s) {
  Json j;
  j["child"] = s.child.id;
  j["channel"] = std::string(to_string(s.channel));
  j["window_start"] = s.window_start.millis;
  j["window_end"] = s.window_end.millis;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["dominant"] = std::string(to_string(s.dominant));
  return j;
}

PredictionSummary summary_from(const Json& j) {
  PredictionSummary s;
  try {
    s.child.id = j.at("child").get<std::string>();
    auto channel = parse_feature_kind(j.at("channel").get<std::string>());
    auto dominant = parse_emotion(j.at("dominant").get<std::string>());
    if (!channel || !dominant) throw InputError("summaries.log: bad channel or label");
    s.channel = *channel;
    s.dominant = *dominant;
    s.window_start.millis = j.at("window_start").get<std::int64_t>();
    s.window_end.millis = j.at("window_end").get<std::int64_t>();
    s.count = j.at("count").get<std::uint64_t>();
    s.mean = j.at("mean").get<Distribution>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("summaries.log: ") + e.what());
  }
  return s;
}

}  // namespace

std::string_view to_string(Severity severity) {
  return severity == Severity::Critical ? "critical" : "warning";
}

std::string_view to_string(DispatchStatus status) {
  switch (status) {
    case DispatchStatus::Delivered:
      return "delivered";
    case DispatchStatus::Suppressed:
      return "suppressed";
    case DispatchStatus::Queued:
      return "queued";
  }
  return "delivered";
}

std::optional<std::string> Schedule::check() const {
  auto sorted = quiet_windows;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto [start, end] = sorted[i];
    if (start < 0 || start >= end || end > kMillisPerDay) {
      return "quiet window [" + std::to_string(start) + ", " + std::to_string(end) +
             ") must satisfy 0 <= start < end <= 86400000";
    }
    if (i > 0 && sorted[i - 1].second > start) return "quiet windows overlap";
  }
  return std::nullopt;
}

std::optional<Timestamp> Schedule::quiet_until(Timestamp now) const {
  const std::int64_t day_start = now.millis - now.millis % kMillisPerDay;
  const std::int64_t of_day = now.millis % kMillisPerDay;
  for (const auto& [start, end] : quiet_windows) {
    if (of_day >= start && of_day < end) return Timestamp{day_start + end};
  }
  return std::nullopt;
}

void save_model_file(const fs::path& path, const MlpModel& model) {
  if (auto problem = model.check()) throw InputError("refusing to save invalid model: " + *problem);
  write_text(path, serialize_model(model));
}

MlpModel load_model_file(const fs::path& path) { return deserialize_model(read_text(path)); }

std::string encode_schedule(const Schedule& schedule) {
  Json windows = Json::array();
  for (const auto& [s, e] : schedule.quiet_windows) windows.push_back({s, e});
  Json j;
  j["quiet_windows"] = std::move(windows);
  return j.dump() + "\n";
}

Schedule decode_schedule(std::string_view text) {
  Json j = parse_json(std::string(text), "schedule");
  Schedule s;
  if (!j.is_object() || !j.contains("quiet_windows") || !j["quiet_windows"].is_array()) {
    throw InputError("schedule: expected {\"quiet_windows\": [[start, end], ...]}");
  }
  for (const auto& w : j["quiet_windows"]) {
    if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer()) {
      throw InputError("schedule: each window is [start_ms, end_ms]");
    }
    s.quiet_windows.emplace_back(w[0].get<std::int64_t>(), w[1].get<std::int64_t>());
  }
  if (auto problem = s.check()) throw InputError("schedule: " + *problem);
  return s;
}

DataStore::DataStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path DataStore::child_dir(const ChildId& child) const {
  if (!safe_component(child.id) || child.id == "models") {
    throw InputError("child id `" + child.id + "` cannot be used as a directory name");
  }
  return root_ / child.id;
}

void DataStore::append_line(const fs::path& path, const std::string& line) const {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw InputError("cannot append to " + path.string());
  const std::string record = line + "\n";
  out.write(record.data(), static_cast<std::streamsize>(record.size()));
  if (!out.flush()) throw InputError("append failed for " + path.string());
}

void DataStore::append_event(const BehaviorEvent& event) {
  if (auto violation = validate_event(event)) throw InputError("invalid event: " + *violation);
  const fs::path path = child_dir(event.child) / "events.log";
  auto it = newest_.find(event.child);
  if (it == newest_.end()) {
    auto lines = read_lines(path);
    if (!lines.empty()) it = newest_.emplace(event.child, decode_event(lines.back()).ts).first;
  }
  if (it != newest_.end() && event.ts < it->second) {
    throw OrderingError("append out of order for child " + event.child.id + ": ts " +
                        std::to_string(event.ts.millis) + " after " + std::to_string(it->second.millis));
  }
  append_line(path, encode_event(event));
  newest_[event.child] = event.ts;
}

std::vector<BehaviorEvent> DataStore::read_events(const ChildId& child) const {
  std::vector<BehaviorEvent> out;
  for (const auto& line : read_lines(child_dir(child) / "events.log")) out.push_back(decode_event(line));
  return out;
}

std::vector<BehaviorEvent> DataStore::query_window(const ChildId& child, Timestamp t0, Timestamp t1) const {
  if (t1 < t0) throw InputError("query_window: t0 must not exceed t1");
  std::vector<BehaviorEvent> out;
  for (auto& e : read_events(child)) {
    if (e.ts >= t0 && e.ts <= t1) out.push_back(std::move(e));
  }
  return out;
}

std::vector<ChildId> DataStore::children() const {
  std::vector<ChildId> out;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "events.log")) {
      out.push_back({entry.path().filename().string()});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path DataStore::model_path(const std::string& name) const {
  if (!safe_component(name)) throw InputError("invalid model name `" + name + "`");
  return root_ / "models" / (name + ".model");
}

void DataStore::save_model(const std::string& name, const MlpModel& model) const {
  save_model_file(model_path(name), model);
}

MlpModel DataStore::load_model(const std::string& name) const { return load_model_file(model_path(name)); }

std::size_t DataStore::record_alert(const AlertRecord& record) {
  const fs::path path = child_dir(record.alert.child) / "alerts.log";
  auto it = alert_counts_.find(record.alert.child);
  if (it == alert_counts_.end()) {
    it = alert_counts_.emplace(record.alert.child, read_lines(path).size()).first;
  }
  append_line(path, alert_record_json(record).dump());
  return it->second++;
}

std::vector<AlertRecord> DataStore::read_alerts(const ChildId& child) const {
  std::vector<AlertRecord> out;
  for (const auto& line : read_lines(child_dir(child) / "alerts.log")) {
    out.push_back(alert_record_from(parse_json(line, "alerts.log")));
  }
  return out;
}

AlertRecord DataStore::read_alert(const ChildId& child, std::size_t id) const {
  auto all = read_alerts(child);
  if (id >= all.size()) throw InputError("no alert record " + std::to_string(id) + " for child " + child.id);
  return all[id];
}

void DataStore::record_summary(const PredictionSummary& summary) {
  append_line(child_dir(summary.child) / "summaries.log", summary_json(summary).dump());
}

std::vector<PredictionSummary> DataStore::read_summaries(const ChildId& child) const {
  std::vector<PredictionSummary> out;
  for (const auto& line : read_lines(child_dir(child) / "summaries.log")) {
    out.push_back(summary_from(parse_json(line, "summaries.log")));
  }
  return out;
}

void DataStore::register_familiar_voice(const FamiliarVoice& voice) {
  if (voice.name.empty()) throw InputError("familiar voice needs a name");
  if (voice.descriptor.size() != kVoiceBandCount ||
      !std::all_of(voice.descriptor.begin(), voice.descriptor.end(), [](double v) { return std::isfinite(v); })) {
    throw InputError("familiar voice `" + voice.name + "` needs 26 finite descriptor values");
  }
  auto voices = familiar_voices();
  for (const auto& v : voices) {
    if (v.name == voice.name) throw InputError("duplicate familiar voice `" + voice.name + "`");
  }
  voices.push_back(voice);
  Json arr = Json::array();
  for (const auto& v : voices) arr.push_back({{"name", v.name}, {"descriptor", v.descriptor}});
  Json j;
  j["voices"] = std::move(arr);
  write_text(root_ / "voices.cfg", j.dump() + "\n");
}

std::vector<FamiliarVoice> DataStore::familiar_voices() const {
  const fs::path path = root_ / "voices.cfg";
  std::vector<FamiliarVoice> out;
  if (!fs::exists(path)) return out;
  Json j = parse_json(read_text(path), "voices.cfg");
  try {
    for (const auto& v : j.at("voices")) {
      out.push_back({v.at("name").get<std::string>(), v.at("descriptor").get<std::vector<double>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("voices.cfg: ") + e.what());
  }
  return out;
}

void DataStore::save_schedule(const Schedule& schedule) const {
  if (auto problem = schedule.check()) throw InputError("schedule: " + *problem);
  write_text(root_ / "schedule.cfg", encode_schedule(schedule));
}

Schedule DataStore::load_schedule() const {
  const fs::path path = root_ / "schedule.cfg";
  if (!fs::exists(path)) return {};
  return decode_schedule(read_text(path));
}

}  // namespace smarttoy
