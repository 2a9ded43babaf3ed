#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace egomem {

/// Thrown for unreadable or invalid corpus files. Messages carry
/// "file:line:" context where a line is known.
class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Agent {
    std::string id;    // e.g. "A1_JAKE"
    std::string name;  // display name, e.g. "Jake"
};

// ─── Roster ────────────────────────────────────────────────────
// The set of agents a corpus may reference. Order is the roster
// order (used by agent-count ablations and deterministic fallbacks).

class Roster {
public:
    Roster() = default;
    explicit Roster(std::vector<Agent> agents);

    static Roster from_json(const nlohmann::json& j);
    static Roster from_json_file(const std::string& path);

    nlohmann::json to_json() const;
    void save_json_file(const std::string& path) const;

    std::size_t size() const { return agents_.size(); }
    const Agent& at(std::size_t i) const { return agents_.at(i); }
    const std::vector<Agent>& agents() const { return agents_; }

    bool has_id(std::string_view id) const;
    const Agent* find_id(std::string_view id) const;
    /// Case-insensitive display-name lookup.
    const Agent* find_name(std::string_view name) const;

    /// Roster restricted to the first `m` agents, order preserved.
    Roster prefix(std::size_t m) const;

private:
    std::vector<Agent> agents_;
};

// ─── Time ──────────────────────────────────────────────────────

/// A point in corpus time: a day number plus a packed HHMMSSFF
/// time of day. Total order is lexicographic on (day, time), which
/// coincides with lexicographic order of the canonical string
/// "DAY{d}_{HHMMSSFF}" within a day.
class Timestamp {
public:
    Timestamp() = default;
    Timestamp(int day, int hour, int minute, int second, int centiframe);

    /// Parses an 8-digit "HHMMSSFF" field.
    static Timestamp parse(int day, std::string_view hhmmssff);
    /// Parses the canonical form "DAY{d}_{HHMMSSFF}".
    static Timestamp parse_canonical(std::string_view s);

    int day() const { return day_; }
    int hour() const { return packed_ / 1000000; }
    int minute() const { return packed_ / 10000 % 100; }
    int second() const { return packed_ / 100 % 100; }
    int centiframe() const { return packed_ % 100; }
    int packed() const { return packed_; }

    /// Seconds since midnight, ignoring centiframes.
    int seconds_of_day() const;

    std::string hhmmssff() const;
    std::string canonical() const;  // "DAY3_12400000"

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

private:
    int day_ = 1;
    int packed_ = 0;  // HHMMSSFF
};

struct TimeInterval {
    Timestamp start;
    Timestamp end;

    friend auto operator<=>(const TimeInterval&, const TimeInterval&) = default;
};

/// Validates start < end and same-day containment.
TimeInterval make_interval(Timestamp start, Timestamp end);

// ─── Records ───────────────────────────────────────────────────

enum class CaptionKind { VisualCaption, Transcript };

std::string_view caption_kind_name(CaptionKind k);
CaptionKind parse_caption_kind(std::string_view s);

struct CaptionRecord {
    std::string agent;  // roster id
    TimeInterval interval;
    CaptionKind kind = CaptionKind::VisualCaption;
    std::string text;
};

enum class Category { SI, TC, ToM, TR, EI };
enum class Subtype { SingleSpan, MultiSpan, Concurrency, Comparison };

std::string_view category_name(Category c);
Category parse_category(std::string_view s);
std::string_view subtype_name(Subtype s);
Subtype parse_subtype(std::string_view s);

constexpr std::array<Category, 5> kAllCategories = {
    Category::SI, Category::TC, Category::ToM, Category::TR, Category::EI};

struct QaItem {
    std::string id;
    Category category = Category::SI;
    std::optional<Subtype> subtype;
    std::string question;
    std::array<std::string, 5> options;
    int answer_index = 0;  // 0..4
    std::vector<std::string> referenced_agents;  // roster ids
    std::vector<TimeInterval> referenced_intervals;
    std::optional<std::string> gold_context;
    /// Unrecognized fields, preserved verbatim on rewrite.
    std::map<std::string, nlohmann::json> extra;
};

struct CorpusStats {
    int num_agents = 0;
    double hours_per_agent = 0.0;
    double total_hours = 0.0;
};

// ─── Operations ────────────────────────────────────────────────

/// Loads a captions JSONL file. Records are validated against the
/// roster and returned sorted by (agent, interval start).
std::vector<CaptionRecord> load_captions(const std::string& path, const Roster& roster);
void save_captions(const std::string& path, std::span<const CaptionRecord> records);

nlohmann::json caption_to_json(const CaptionRecord& r);
CaptionRecord caption_from_json(const nlohmann::json& j, const Roster& roster);

/// Loads a QA JSONL file; answer letters A–E map to indices 0–4.
/// The roster-less overloads skip referenced-agent validation.
std::vector<QaItem> load_qa(const std::string& path, const Roster& roster);
std::vector<QaItem> load_qa(const std::string& path);
void save_qa(const std::string& path, std::span<const QaItem> items);

nlohmann::json qa_to_json(const QaItem& item);
QaItem qa_from_json(const nlohmann::json& j, const Roster& roster);
QaItem qa_from_json(const nlohmann::json& j);

struct BucketKey {
    int day = 1;
    int start_packed = 0;  // HHMMSSFF of the aligned bucket start

    Timestamp start() const { return Timestamp::parse(day, pack_string()); }
    std::string canonical() const;

    friend auto operator<=>(const BucketKey&, const BucketKey&) = default;

private:
    std::string pack_string() const;
};

/// Bucket key containing `t`, for `width_minutes`-wide buckets
/// aligned to the hour.
BucketKey bucket_of(const Timestamp& t, int width_minutes);

using BucketMap = std::map<BucketKey, std::map<std::string, std::vector<CaptionRecord>>>;

/// Partitions records into aligned time buckets by interval start;
/// within a bucket, records are grouped per agent in start order.
/// width_minutes must divide 60.
BucketMap bucket_by_interval(std::span<const CaptionRecord> records, int width_minutes);

/// N agents, mean recorded hours per agent, and their product.
CorpusStats corpus_stats(const Roster& roster, std::span<const CaptionRecord> records);

}  // namespace egomem
