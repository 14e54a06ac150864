#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "quorum/core.hpp"

namespace quorum {

/// One line of a run's event log.
struct Event {
  std::uint64_t seq = 0;
  std::string ts;  // RFC 3339, UTC
  std::string type;
  json payload;

  bool operator==(const Event&) const = default;
};

/// Serializes with the envelope keys in the order seq, ts, type, payload.
std::string event_to_line(const Event& event);
/// Throws std::invalid_argument on malformed lines.
Event event_from_line(std::string_view line);

std::string format_rfc3339(std::chrono::system_clock::time_point tp);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::string timestamp(std::uint64_t seq) = 0;
};

/// Wall-clock timestamps.
class SystemClock : public Clock {
 public:
  std::string timestamp(std::uint64_t seq) override;
};

/// Timestamps derived from the sequence number (epoch + seq seconds) so that
/// identical runs produce byte-identical logs.
class LogicalClock : public Clock {
 public:
  std::string timestamp(std::uint64_t seq) override;
};

/// Totally ordered, append-only event log. Optionally mirrored to a JSON
/// Lines file; readers can block for events past a cursor.
class EventLog {
 public:
  using Listener = std::function<void(const Event&)>;

  explicit EventLog(std::unique_ptr<Clock> clock = std::make_unique<LogicalClock>());

  /// Starts mirroring to `path`, appending. Seeds the log with `existing`
  /// (events already in the file) without rewriting them.
  void attach_file(const std::filesystem::path& path, std::vector<Event> existing = {});
  void add_listener(Listener listener);

  void emit(const std::string& type, json payload);
  /// Timestamp the next event would carry.
  std::string next_timestamp() const;

  std::vector<Event> events() const;
  std::vector<Event> events_after(std::uint64_t seq) const;
  std::uint64_t last_seq() const;

  /// Blocks until an event with seq > `after` exists, the log is closed, or
  /// `timeout` elapses. Returns the events found (possibly none).
  std::vector<Event> wait_after(std::uint64_t after, std::chrono::milliseconds timeout) const;

  /// Marks the log finished; waiters wake up.
  void close();
  bool closed() const;

 private:
  std::unique_ptr<Clock> clock_;
  std::mutex emit_mutex_;  // keeps listener calls in seq order
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::vector<Event> events_;
  std::vector<Listener> listeners_;
  std::ofstream file_;
  bool closed_ = false;
};

}  // namespace quorum
