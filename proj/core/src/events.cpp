#include "gml/events.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gml/error.hpp"

namespace gml {

namespace {

constexpr std::array kKindNames = {
    std::pair{EventKind::Warmup, std::string_view("Warmup")},
    std::pair{EventKind::LocalEpoch, std::string_view("LocalEpoch")},
    std::pair{EventKind::Activation, std::string_view("Activation")},
    std::pair{EventKind::Transfer, std::string_view("Transfer")},
    std::pair{EventKind::MutualLearning, std::string_view("MutualLearning")},
    std::pair{EventKind::Resume, std::string_view("Resume")},
    std::pair{EventKind::Upload, std::string_view("Upload")},
    std::pair{EventKind::Download, std::string_view("Download")},
};

nlohmann::ordered_json endpoint(const std::optional<int>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "Unknown";
}

EventKind event_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw Error(ErrorCode::BadConfig, "unknown event kind '" + std::string(name) + "'");
}

void EventLog::append(GossipEvent ev) {
  ev.seq = events_.size();
  events_.push_back(ev);
}

void EventLog::append(int round, EventKind kind, std::optional<int> sender, std::optional<int> receiver,
                      std::uint64_t bytes, std::uint64_t messages) {
  append(GossipEvent{round, 0, kind, sender, receiver, bytes, messages});
}

std::size_t EventLog::count(EventKind kind) const noexcept {
  std::size_t n = 0;
  for (const auto& e : events_) n += e.kind == kind;
  return n;
}

CommunicationTotals communication_totals(const EventLog& log) {
  CommunicationTotals t;
  for (const auto& e : log.events()) {
    if (e.kind == EventKind::Transfer || e.kind == EventKind::Upload || e.kind == EventKind::Download) {
      t.messages += e.messages;
      t.bytes += e.bytes;
    }
  }
  return t;
}

std::string to_jsonl(const EventLog& log) {
  std::string out;
  for (const auto& e : log.events()) {
    nlohmann::ordered_json j;
    j["round"] = e.round;
    j["seq"] = e.seq;
    j["kind"] = to_string(e.kind);
    j["sender"] = endpoint(e.sender);
    j["receiver"] = endpoint(e.receiver);
    j["bytes"] = e.bytes;
    j["messages"] = e.messages;
    out += j.dump();
    out += '\n';
  }
  return out;
}

EventLog parse_jsonl(std::string_view text) {
  EventLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GossipEvent e;
      if (j.at("seq").get<std::uint64_t>() != log.size())
        throw Error(ErrorCode::BadConfig, "event log line " + std::to_string(lineno) + ": seq out of order");
      e.round = j.at("round").get<int>();
      e.kind = event_kind_from_string(j.at("kind").get<std::string>());
      if (!j.at("sender").is_null()) e.sender = j.at("sender").get<int>();
      if (!j.at("receiver").is_null()) e.receiver = j.at("receiver").get<int>();
      e.bytes = j.at("bytes").get<std::uint64_t>();
      e.messages = j.at("messages").get<std::uint64_t>();
      log.append(e);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::BadConfig, "event log line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return log;
}

void write_jsonl(const EventLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_jsonl(log);
}

EventLog read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

std::string event_log_digest(const EventLog& log) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_jsonl(log)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gml
