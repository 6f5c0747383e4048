#ifndef INSIDER_INGEST_H_
#define INSIDER_INGEST_H_

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace insider {

using Timestamp = std::chrono::sys_seconds;

inline constexpr Timestamp kDefaultBaseDate{
    std::chrono::sys_days{std::chrono::year{2018} / 1 / 1}};

// "2018-01-01T00:00:00Z".
std::string format_iso8601(Timestamp t);
// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" and the same with a trailing
// "Z". Throws FormatError otherwise.
Timestamp parse_iso8601(std::string_view text);

// Identifiers are kept numerically: users are "U<digits>" and computers
// "C<digits>" in the anonymized logs, so the prefix carries no information.
struct UserId {
  std::uint32_t value = 0;
  auto operator<=>(const UserId&) const = default;
};

struct HostId {
  std::uint32_t value = 0;
  auto operator<=>(const HostId&) const = default;
};

std::string to_string(UserId id);
std::string to_string(HostId id);
// nullopt unless the text is the prefix followed by 1-9 digits without a
// leading zero.
std::optional<UserId> parse_user_id(std::string_view text);
std::optional<HostId> parse_host_id(std::string_view text);

struct RawRecord {
  std::int64_t seconds = 0;
  UserId user;
  HostId src;
  HostId dst;
  bool operator==(const RawRecord&) const = default;
};

struct AuthEvent {
  Timestamp timestamp;
  UserId user;
  HostId src;
  HostId dst;
  bool is_red_team = false;
  bool operator==(const AuthEvent&) const = default;
};

struct IngestStats {
  std::uint64_t total_rows = 0;
  std::uint64_t dropped_rows = 0;
  std::uint64_t users_seen = 0;
  std::uint64_t red_team_rows = 0;
  std::map<UserId, std::uint64_t> per_user_counts;

  std::uint64_t kept_rows() const { return total_rows - dropped_rows; }
};

struct IngestConfig {
  // Read the 9-field LANL auth schema instead of the 4-field form.
  bool lanl_full = false;
  Timestamp base_date = kDefaultBaseDate;
};

// Parses one line; nullopt if malformed.
std::optional<RawRecord> parse_auth_line(std::string_view line, bool lanl_full);

// Single streaming pass over an auth log. Each well-formed line is handed to
// `sink` in file order; malformed lines are dropped and counted. Throws
// FormatError if more than half of the first 1000 lines are malformed (at
// least 10 lines must have been read for the check to apply), IoError if the
// stream fails.
IngestStats parse_auth_stream(std::istream& source, const IngestConfig& config,
                              const std::function<void(const RawRecord&)>& sink);

struct RawRecordHash {
  std::size_t operator()(const RawRecord& r) const noexcept;
};

using RedTeamSet = std::unordered_set<RawRecord, RawRecordHash>;

struct RedTeamLoad {
  RedTeamSet records;
  std::uint64_t dropped_rows = 0;
};

// The red-team file shares the 4-field layout. Under `lanl_full` the user
// field may carry an "@DOMAIN" suffix, which is stripped.
RedTeamLoad load_red_team(std::istream& source, bool lanl_full);

// Exact 4-tuple membership; the flag is a label only.
inline bool join_ground_truth(const RawRecord& record, const RedTeamSet& red_team) {
  return red_team.contains(record);
}

inline AuthEvent assign_absolute_time(const RawRecord& record, Timestamp base_date,
                                      bool is_red_team = false) {
  return AuthEvent{base_date + std::chrono::seconds{record.seconds}, record.user, record.src,
                   record.dst, is_red_team};
}

// Record counts per time bucket, in bucket order. Bucket starts are offsets
// in seconds from the start of monitoring.
class VolumeHistogram {
 public:
  explicit VolumeHistogram(std::chrono::seconds bucket);
  void add(const RawRecord& record);
  std::vector<std::pair<std::int64_t, std::uint64_t>> buckets() const;

 private:
  std::int64_t width_;
  std::map<std::int64_t, std::uint64_t> counts_;
};

std::vector<std::pair<std::int64_t, std::uint64_t>> volume_histogram(
    std::span<const RawRecord> records, std::chrono::seconds bucket);

using UserSequences = std::map<UserId, std::vector<AuthEvent>>;

// Accumulates events per user. With a filter only the requested users are
// kept, and requested users that never appear still get an empty sequence.
class UserPartitioner {
 public:
  explicit UserPartitioner(std::optional<std::set<UserId>> filter = std::nullopt);
  void add(const AuthEvent& event);
  // Stable-sorts each sequence by timestamp and hands them over.
  UserSequences finish() &&;

 private:
  std::optional<std::set<UserId>> filter_;
  UserSequences users_;
};

UserSequences partition_by_user(std::span<const AuthEvent> events,
                                std::optional<std::set<UserId>> filter = std::nullopt);

struct IngestResult {
  UserSequences users;
  IngestStats stats;
  std::uint64_t red_team_dropped = 0;
};

// parse -> join -> timestamp -> partition in one pass.
IngestResult ingest_auth_log(std::istream& auth, std::istream* red_team,
                             const IngestConfig& config,
                             std::optional<std::set<UserId>> filter = std::nullopt);

// Per-user event file: iso8601_timestamp,user,src,dst,is_red_team
void write_events_csv(std::ostream& out, std::span<const AuthEvent> events);
std::vector<AuthEvent> read_events_csv(std::istream& in);

}  // namespace insider

template <>
struct std::hash<insider::UserId> {
  std::size_t operator()(insider::UserId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

#endif  // INSIDER_INGEST_H_
