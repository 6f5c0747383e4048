#include "insider/ingest.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include "insider/error.h"

namespace insider {
namespace {

constexpr std::size_t kFormatProbeLines = 1000;
constexpr std::size_t kFormatProbeMinimum = 10;

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::optional<std::uint32_t> parse_prefixed(std::string_view text, char prefix) {
  if (text.size() < 2 || text.size() > 10 || text[0] != prefix) return std::nullopt;
  const std::string_view digits = text.substr(1);
  if (digits.size() > 1 && digits[0] == '0') return std::nullopt;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  std::uint32_t value = 0;
  if (!parse_int(digits, value)) return std::nullopt;
  return value;
}

// Splits on commas into at most `max_fields` views; returns the field count,
// or max_fields + 1 if there are more.
std::size_t split_fields(std::string_view line, std::span<std::string_view> fields) {
  std::size_t n = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (n == fields.size()) return fields.size() + 1;
    fields[n++] = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
    if (comma == std::string_view::npos) return n;
    start = comma + 1;
  }
}

std::string_view strip_domain(std::string_view user) {
  const std::size_t at = user.find('@');
  return at == std::string_view::npos ? user : user.substr(0, at);
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const sys_days day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Timestamp parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  auto fail = [&]() -> FormatError {
    return FormatError("invalid ISO-8601 timestamp '" + std::string(text) + "'");
  };
  std::string_view s = text;
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 10 && s.size() != 19) throw fail();
  int y = 0;
  unsigned mo = 0, d = 0;
  int hh = 0, mm = 0, ss = 0;
  if (s[4] != '-' || s[7] != '-' || !parse_int(s.substr(0, 4), y) ||
      !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d)) {
    throw fail();
  }
  if (s.size() == 19) {
    if (s[10] != 'T' || s[13] != ':' || s[16] != ':' || !parse_int(s.substr(11, 2), hh) ||
        !parse_int(s.substr(14, 2), mm) || !parse_int(s.substr(17, 2), ss)) {
      throw fail();
    }
    if (hh > 23 || mm > 59 || ss > 59 || hh < 0 || mm < 0 || ss < 0) throw fail();
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) throw fail();
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string to_string(UserId id) { return "U" + std::to_string(id.value); }
std::string to_string(HostId id) { return "C" + std::to_string(id.value); }

std::optional<UserId> parse_user_id(std::string_view text) {
  if (auto v = parse_prefixed(text, 'U')) return UserId{*v};
  return std::nullopt;
}

std::optional<HostId> parse_host_id(std::string_view text) {
  if (auto v = parse_prefixed(text, 'C')) return HostId{*v};
  return std::nullopt;
}

std::optional<RawRecord> parse_auth_line(std::string_view line, bool lanl_full) {
  line = trim_cr(line);
  std::string_view fields[9];
  const std::size_t expected = lanl_full ? 9 : 4;
  if (split_fields(line, std::span(fields, expected)) != expected) return std::nullopt;

  std::string_view user_field = fields[1];
  std::string_view src_field = fields[2];
  std::string_view dst_field = fields[3];
  if (lanl_full) {
    // time, src user@dom, dst user@dom, src computer, dst computer, ...
    user_field = strip_domain(fields[1]);
    src_field = fields[3];
    dst_field = fields[4];
  }

  RawRecord record;
  if (!parse_int(fields[0], record.seconds) || record.seconds < 0) return std::nullopt;
  auto user = parse_user_id(user_field);
  auto src = parse_host_id(src_field);
  auto dst = parse_host_id(dst_field);
  if (!user || !src || !dst) return std::nullopt;
  record.user = *user;
  record.src = *src;
  record.dst = *dst;
  return record;
}

IngestStats parse_auth_stream(std::istream& source, const IngestConfig& config,
                              const std::function<void(const RawRecord&)>& sink) {
  if (!source) throw IoError("auth log stream is not readable");
  IngestStats stats;
  std::vector<RawRecord> probe;
  probe.reserve(kFormatProbeLines);
  bool probing = true;

  auto end_probe = [&] {
    probing = false;
    if (stats.total_rows >= kFormatProbeMinimum && stats.dropped_rows * 2 > stats.total_rows) {
      throw FormatError("more than half of the first " + std::to_string(stats.total_rows) +
                        " lines are malformed; is this an auth log" +
                        (config.lanl_full ? " in full LANL format?" : " in 4-field format?"));
    }
    for (const auto& r : probe) sink(r);
    probe.clear();
    probe.shrink_to_fit();
  };

  std::string line;
  while (std::getline(source, line)) {
    ++stats.total_rows;
    auto record = parse_auth_line(line, config.lanl_full);
    if (!record) {
      ++stats.dropped_rows;
    } else {
      ++stats.per_user_counts[record->user];
      if (probing) {
        probe.push_back(*record);
      } else {
        sink(*record);
      }
    }
    if (probing && stats.total_rows == kFormatProbeLines) end_probe();
  }
  if (source.bad()) throw IoError("read error while parsing auth log");
  if (probing) end_probe();
  stats.users_seen = stats.per_user_counts.size();
  return stats;
}

std::size_t RawRecordHash::operator()(const RawRecord& r) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(r.seconds) * 0x9e3779b97f4a7c15ULL;
  h ^= (std::uint64_t{r.user.value} << 32 | r.src.value) + 0x7f4a7c159e3779b9ULL + (h << 6) +
       (h >> 2);
  h ^= std::uint64_t{r.dst.value} + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

RedTeamLoad load_red_team(std::istream& source, bool lanl_full) {
  if (!source) throw IoError("red-team stream is not readable");
  RedTeamLoad load;
  std::string line;
  while (std::getline(source, line)) {
    std::string_view view = trim_cr(line);
    if (view.empty()) continue;
    std::string normalized;
    if (lanl_full) {
      // The LANL red-team file is 4-field but its users carry a domain.
      std::string_view fields[4];
      if (split_fields(view, fields) == 4) {
        normalized = std::string(fields[0]) + "," + std::string(strip_domain(fields[1])) + "," +
                     std::string(fields[2]) + "," + std::string(fields[3]);
        view = normalized;
      }
    }
    if (auto record = parse_auth_line(view, false)) {
      load.records.insert(*record);
    } else {
      ++load.dropped_rows;
    }
  }
  if (source.bad()) throw IoError("read error while loading red-team file");
  return load;
}

VolumeHistogram::VolumeHistogram(std::chrono::seconds bucket) : width_(bucket.count()) {
  if (width_ <= 0) throw DataError("histogram bucket must be positive");
}

void VolumeHistogram::add(const RawRecord& record) {
  ++counts_[record.seconds / width_ * width_];
}

std::vector<std::pair<std::int64_t, std::uint64_t>> VolumeHistogram::buckets() const {
  return {counts_.begin(), counts_.end()};
}

std::vector<std::pair<std::int64_t, std::uint64_t>> volume_histogram(
    std::span<const RawRecord> records, std::chrono::seconds bucket) {
  VolumeHistogram histogram(bucket);
  for (const auto& r : records) histogram.add(r);
  return histogram.buckets();
}

UserPartitioner::UserPartitioner(std::optional<std::set<UserId>> filter)
    : filter_(std::move(filter)) {
  if (filter_) {
    for (UserId u : *filter_) users_[u];
  }
}

void UserPartitioner::add(const AuthEvent& event) {
  if (filter_) {
    auto it = users_.find(event.user);
    if (it != users_.end()) it->second.push_back(event);
    return;
  }
  users_[event.user].push_back(event);
}

UserSequences UserPartitioner::finish() && {
  for (auto& [user, events] : users_) {
    std::stable_sort(events.begin(), events.end(),
                     [](const AuthEvent& a, const AuthEvent& b) { return a.timestamp < b.timestamp; });
    events.shrink_to_fit();
  }
  return std::move(users_);
}

UserSequences partition_by_user(std::span<const AuthEvent> events,
                                std::optional<std::set<UserId>> filter) {
  UserPartitioner partitioner(std::move(filter));
  for (const auto& e : events) partitioner.add(e);
  return std::move(partitioner).finish();
}

IngestResult ingest_auth_log(std::istream& auth, std::istream* red_team,
                             const IngestConfig& config,
                             std::optional<std::set<UserId>> filter) {
  IngestResult result;
  RedTeamSet red;
  if (red_team != nullptr) {
    auto load = load_red_team(*red_team, config.lanl_full);
    red = std::move(load.records);
    result.red_team_dropped = load.dropped_rows;
  }
  UserPartitioner partitioner(std::move(filter));
  std::uint64_t flagged_rows = 0;
  result.stats = parse_auth_stream(auth, config, [&](const RawRecord& r) {
    const bool flagged = !red.empty() && join_ground_truth(r, red);
    if (flagged) ++flagged_rows;
    partitioner.add(assign_absolute_time(r, config.base_date, flagged));
  });
  result.stats.red_team_rows = flagged_rows;
  result.users = std::move(partitioner).finish();
  return result;
}

void write_events_csv(std::ostream& out, std::span<const AuthEvent> events) {
  for (const auto& e : events) {
    out << format_iso8601(e.timestamp) << ',' << to_string(e.user) << ',' << to_string(e.src)
        << ',' << to_string(e.dst) << ',' << (e.is_red_team ? 1 : 0) << '\n';
  }
}

std::vector<AuthEvent> read_events_csv(std::istream& in) {
  std::vector<AuthEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim_cr(line);
    if (view.empty()) continue;
    std::string_view f[5];
    auto fail = [&] {
      return FormatError("events file line " + std::to_string(line_no) + ": malformed '" + line +
                         "'");
    };
    if (split_fields(view, f) != 5) throw fail();
    auto user = parse_user_id(f[1]);
    auto src = parse_host_id(f[2]);
    auto dst = parse_host_id(f[3]);
    if (!user || !src || !dst || (f[4] != "0" && f[4] != "1")) throw fail();
    events.push_back(AuthEvent{parse_iso8601(f[0]), *user, *src, *dst, f[4] == "1"});
  }
  if (in.bad()) throw IoError("read error while loading events file");
  return events;
}

}  // namespace insider
