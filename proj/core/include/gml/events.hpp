#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gml {

enum class EventKind { Warmup, LocalEpoch, Activation, Transfer, MutualLearning, Resume, Upload, Download };

std::string_view to_string(EventKind kind) noexcept;
/// Throws BadConfig on an unknown name.
EventKind event_kind_from_string(std::string_view name);

/// One protocol occurrence. `sender` / `receiver` are participant indices;
/// local events use `sender` for the acting site, server-side endpoints of
/// Upload/Download are empty.
struct GossipEvent {
  int round = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::LocalEpoch;
  std::optional<int> sender;
  std::optional<int> receiver;
  std::uint64_t bytes = 0;
  std::uint64_t messages = 0;

  friend bool operator==(const GossipEvent&, const GossipEvent&) = default;
};

/// Append-only, totally ordered by (round, seq); seq is assigned on append.
class EventLog {
 public:
  void append(GossipEvent ev);
  void append(int round, EventKind kind, std::optional<int> sender = {}, std::optional<int> receiver = {},
              std::uint64_t bytes = 0, std::uint64_t messages = 0);

  const std::vector<GossipEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  std::size_t count(EventKind kind) const noexcept;

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  std::vector<GossipEvent> events_;
};

struct CommunicationTotals {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
  friend bool operator==(const CommunicationTotals&, const CommunicationTotals&) = default;
};

/// Sums over payload-bearing events (Transfer, Upload, Download).
CommunicationTotals communication_totals(const EventLog& log);

/// JSON Lines, one object per event with keys round, seq, kind, sender,
/// receiver, bytes, messages (absent endpoints are null).
std::string to_jsonl(const EventLog& log);
EventLog parse_jsonl(std::string_view text);
void write_jsonl(const EventLog& log, const std::filesystem::path& path);
EventLog read_jsonl(const std::filesystem::path& path);

/// FNV-1a 64 over the JSONL rendering, as 16 hex digits.
std::string event_log_digest(const EventLog& log);

}  // namespace gml
