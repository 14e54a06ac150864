#include "quorum/events.hpp"

#include <ctime>

#include <spdlog/fmt/fmt.h>

namespace quorum {

std::string event_to_line(const Event& event) {
  return fmt::format(R"({{"seq":{},"ts":{},"type":{},"payload":{}}})", event.seq, json(event.ts).dump(),
                     json(event.type).dump(), event.payload.dump());
}

Event event_from_line(std::string_view line) {
  auto doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw std::invalid_argument("event line is not JSON");
  try {
    Event e;
    e.seq = doc.at("seq").get<std::uint64_t>();
    e.ts = doc.at("ts").get<std::string>();
    e.type = doc.at("type").get<std::string>();
    e.payload = doc.at("payload");
    return e;
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("event line: ") + ex.what());
  }
}

std::string format_rfc3339(std::chrono::system_clock::time_point tp) {
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(tp);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(tp - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  return fmt::format("{}.{:03d}Z", buf, millis);
}

std::string SystemClock::timestamp(std::uint64_t) { return format_rfc3339(std::chrono::system_clock::now()); }

std::string LogicalClock::timestamp(std::uint64_t seq) {
  return format_rfc3339(std::chrono::system_clock::time_point(std::chrono::seconds(seq)));
}

EventLog::EventLog(std::unique_ptr<Clock> clock) : clock_(std::move(clock)) {}

void EventLog::attach_file(const std::filesystem::path& path, std::vector<Event> existing) {
  std::lock_guard lock(mutex_);
  events_ = std::move(existing);
  file_.open(path, std::ios::binary | std::ios::app);
  if (!file_) throw std::runtime_error("cannot open event log " + path.string());
}

void EventLog::add_listener(Listener listener) {
  std::lock_guard lock(mutex_);
  listeners_.push_back(std::move(listener));
}

void EventLog::emit(const std::string& type, json payload) {
  std::lock_guard emit_lock(emit_mutex_);
  std::unique_lock lock(mutex_);
  Event e;
  e.seq = events_.empty() ? 1 : events_.back().seq + 1;
  e.ts = clock_->timestamp(e.seq);
  e.type = type;
  e.payload = std::move(payload);
  if (file_.is_open()) {
    file_ << event_to_line(e) << '\n';
    file_.flush();
  }
  events_.push_back(e);
  const auto listeners = listeners_;
  lock.unlock();
  for (const auto& l : listeners) l(e);
  cv_.notify_all();
}

std::string EventLog::next_timestamp() const {
  std::lock_guard lock(mutex_);
  return clock_->timestamp(events_.empty() ? 1 : events_.back().seq + 1);
}

std::vector<Event> EventLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::vector<Event> EventLog::events_after(std::uint64_t seq) const {
  std::lock_guard lock(mutex_);
  std::vector<Event> out;
  for (const auto& e : events_) {
    if (e.seq > seq) out.push_back(e);
  }
  return out;
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mutex_);
  return events_.empty() ? 0 : events_.back().seq;
}

std::vector<Event> EventLog::wait_after(std::uint64_t after, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || (!events_.empty() && events_.back().seq > after); });
  std::vector<Event> out;
  for (const auto& e : events_) {
    if (e.seq > after) out.push_back(e);
  }
  return out;
}

void EventLog::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
    if (file_.is_open()) file_.close();
  }
  cv_.notify_all();
}

bool EventLog::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

}  // namespace quorum
