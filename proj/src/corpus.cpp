#include "egomem/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "egomem/text.hpp"

namespace egomem {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw CorpusError(where + ": " + what);
}

int parse_int_field(std::string_view s, std::string_view what) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw CorpusError("invalid " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

// ─── Roster ────────────────────────────────────────────────────

Roster::Roster(std::vector<Agent> agents) : agents_(std::move(agents)) {
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (agents_[i].id.empty()) fail("roster", "empty agent id at position " + std::to_string(i));
        if (agents_[i].name.empty()) fail("roster", "empty display name for " + agents_[i].id);
        for (std::size_t j = 0; j < i; ++j) {
            if (agents_[j].id == agents_[i].id) fail("roster", "duplicate agent id " + agents_[i].id);
        }
    }
}

Roster Roster::from_json(const nlohmann::json& j) {
    std::vector<Agent> agents;
    for (const auto& a : j.at("agents")) {
        agents.push_back({a.at("id").get<std::string>(), a.at("name").get<std::string>()});
    }
    return Roster(std::move(agents));
}

Roster Roster::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(path, e.what());
    }
    return from_json(j);
}

nlohmann::json Roster::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : agents_) arr.push_back({{"id", a.id}, {"name", a.name}});
    return nlohmann::json{{"agents", arr}};
}

void Roster::save_json_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out << to_json().dump(2) << '\n';
}

bool Roster::has_id(std::string_view id) const { return find_id(id) != nullptr; }

const Agent* Roster::find_id(std::string_view id) const {
    for (const auto& a : agents_) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

const Agent* Roster::find_name(std::string_view name) const {
    for (const auto& a : agents_) {
        if (a.name.size() == name.size() &&
            std::equal(name.begin(), name.end(), a.name.begin(), [](char x, char y) {
                return std::tolower(static_cast<unsigned char>(x)) ==
                       std::tolower(static_cast<unsigned char>(y));
            })) {
            return &a;
        }
    }
    return nullptr;
}

Roster Roster::prefix(std::size_t m) const {
    std::vector<Agent> sub(agents_.begin(), agents_.begin() + std::min(m, agents_.size()));
    return Roster(std::move(sub));
}

// ─── Timestamp ─────────────────────────────────────────────────

Timestamp::Timestamp(int day, int hour, int minute, int second, int centiframe) : day_(day) {
    if (day < 1) fail("timestamp", "day must be >= 1, got " + std::to_string(day));
    if (hour < 0 || hour > 23) fail("timestamp", "hour out of range: " + std::to_string(hour));
    if (minute < 0 || minute > 59) fail("timestamp", "minute out of range: " + std::to_string(minute));
    if (second < 0 || second > 59) fail("timestamp", "second out of range: " + std::to_string(second));
    if (centiframe < 0 || centiframe > 99) {
        fail("timestamp", "centiframe out of range: " + std::to_string(centiframe));
    }
    packed_ = hour * 1000000 + minute * 10000 + second * 100 + centiframe;
}

Timestamp Timestamp::parse(int day, std::string_view hhmmssff) {
    if (hhmmssff.size() != 8 ||
        !std::all_of(hhmmssff.begin(), hhmmssff.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        fail("timestamp", "expected 8-digit HHMMSSFF, got '" + std::string(hhmmssff) + "'");
    }
    auto two = [&](int i) { return (hhmmssff[i] - '0') * 10 + (hhmmssff[i + 1] - '0'); };
    return Timestamp(day, two(0), two(2), two(4), two(6));
}

Timestamp Timestamp::parse_canonical(std::string_view s) {
    if (s.substr(0, 3) != "DAY") fail("timestamp", "expected DAY{d}_{HHMMSSFF}, got '" + std::string(s) + "'");
    auto us = s.find('_');
    if (us == std::string_view::npos) {
        fail("timestamp", "expected DAY{d}_{HHMMSSFF}, got '" + std::string(s) + "'");
    }
    int day = parse_int_field(s.substr(3, us - 3), "day");
    return parse(day, s.substr(us + 1));
}

int Timestamp::seconds_of_day() const { return hour() * 3600 + minute() * 60 + second(); }

std::string Timestamp::hhmmssff() const {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08d", packed_);
    return buf;
}

std::string Timestamp::canonical() const { return "DAY" + std::to_string(day_) + "_" + hhmmssff(); }

TimeInterval make_interval(Timestamp start, Timestamp end) {
    if (start.day() != end.day()) {
        fail("interval", "crosses day boundary: " + start.canonical() + " .. " + end.canonical());
    }
    if (!(start < end)) {
        fail("interval", "inverted interval: " + start.canonical() + " .. " + end.canonical());
    }
    return TimeInterval{start, end};
}

// ─── Enums ─────────────────────────────────────────────────────

std::string_view caption_kind_name(CaptionKind k) {
    return k == CaptionKind::VisualCaption ? "caption" : "transcript";
}

CaptionKind parse_caption_kind(std::string_view s) {
    if (s == "caption") return CaptionKind::VisualCaption;
    if (s == "transcript") return CaptionKind::Transcript;
    fail("caption kind", "unknown kind '" + std::string(s) + "'");
}

std::string_view category_name(Category c) {
    switch (c) {
        case Category::SI: return "SI";
        case Category::TC: return "TC";
        case Category::ToM: return "ToM";
        case Category::TR: return "TR";
        case Category::EI: return "EI";
    }
    return "?";
}

Category parse_category(std::string_view s) {
    for (Category c : kAllCategories) {
        if (category_name(c) == s) return c;
    }
    fail("category", "unknown category '" + std::string(s) + "'");
}

std::string_view subtype_name(Subtype s) {
    switch (s) {
        case Subtype::SingleSpan: return "single_span";
        case Subtype::MultiSpan: return "multi_span";
        case Subtype::Concurrency: return "concurrency";
        case Subtype::Comparison: return "comparison";
    }
    return "?";
}

Subtype parse_subtype(std::string_view s) {
    for (Subtype t : {Subtype::SingleSpan, Subtype::MultiSpan, Subtype::Concurrency, Subtype::Comparison}) {
        if (subtype_name(t) == s) return t;
    }
    fail("subtype", "unknown subtype '" + std::string(s) + "'");
}

// ─── Captions ──────────────────────────────────────────────────

nlohmann::json caption_to_json(const CaptionRecord& r) {
    return nlohmann::json{{"agent", r.agent},
                          {"day", r.interval.start.day()},
                          {"start", r.interval.start.hhmmssff()},
                          {"end", r.interval.end.hhmmssff()},
                          {"kind", std::string(caption_kind_name(r.kind))},
                          {"text", r.text}};
}

CaptionRecord caption_from_json(const nlohmann::json& j, const Roster& roster) {
    CaptionRecord r;
    r.agent = j.at("agent").get<std::string>();
    if (!roster.has_id(r.agent)) fail("caption", "unknown agent '" + r.agent + "'");
    int day = j.at("day").get<int>();
    Timestamp start = Timestamp::parse(day, j.at("start").get<std::string>());
    Timestamp end = Timestamp::parse(day, j.at("end").get<std::string>());
    r.interval = make_interval(start, end);
    r.kind = parse_caption_kind(j.at("kind").get<std::string>());
    r.text = j.at("text").get<std::string>();
    if (trim(r.text).empty()) fail("caption", "empty text");
    return r;
}

std::vector<CaptionRecord> load_captions(const std::string& path, const Roster& roster) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    std::vector<CaptionRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            records.push_back(caption_from_json(nlohmann::json::parse(line), roster));
        } catch (const std::exception& e) {
            fail(path + ":" + std::to_string(lineno), e.what());
        }
    }
    std::stable_sort(records.begin(), records.end(), [](const CaptionRecord& a, const CaptionRecord& b) {
        if (a.agent != b.agent) return a.agent < b.agent;
        return a.interval.start < b.interval.start;
    });
    return records;
}

void save_captions(const std::string& path, std::span<const CaptionRecord> records) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    for (const auto& r : records) out << caption_to_json(r).dump() << '\n';
}

// ─── QA ────────────────────────────────────────────────────────

namespace {

const char* kKnownQaKeys[] = {"id",      "category", "subtype",           "question",
                              "options", "answer",   "referenced_agents", "referenced_intervals",
                              "gold_context"};

bool known_qa_key(const std::string& k) {
    for (const char* known : kKnownQaKeys) {
        if (k == known) return true;
    }
    return false;
}

}  // namespace

namespace {

QaItem qa_from_json_impl(const nlohmann::json& j, const Roster* roster) {
    QaItem item;
    item.id = j.at("id").get<std::string>();
    item.category = parse_category(j.at("category").get<std::string>());
    if (j.contains("subtype") && !j.at("subtype").is_null()) {
        item.subtype = parse_subtype(j.at("subtype").get<std::string>());
    }
    item.question = j.at("question").get<std::string>();
    const auto& opts = j.at("options");
    if (!opts.is_array() || opts.size() != 5) {
        fail("qa", "expected 5 options, got " + std::to_string(opts.size()));
    }
    for (std::size_t i = 0; i < 5; ++i) item.options[i] = opts[i].get<std::string>();
    std::string letter = j.at("answer").get<std::string>();
    if (letter.size() != 1 || letter[0] < 'A' || letter[0] > 'E') {
        fail("qa", "unknown answer letter '" + letter + "'");
    }
    item.answer_index = letter[0] - 'A';
    if (j.contains("referenced_agents")) {
        for (const auto& a : j.at("referenced_agents")) {
            std::string id = a.get<std::string>();
            if (roster != nullptr && !roster->has_id(id)) {
                fail("qa", "referenced agent '" + id + "' not in roster");
            }
            item.referenced_agents.push_back(std::move(id));
        }
    }
    if (j.contains("referenced_intervals")) {
        for (const auto& iv : j.at("referenced_intervals")) {
            int day = iv.at("day").get<int>();
            item.referenced_intervals.push_back(
                make_interval(Timestamp::parse(day, iv.at("start").get<std::string>()),
                              Timestamp::parse(day, iv.at("end").get<std::string>())));
        }
    }
    if (j.contains("gold_context") && !j.at("gold_context").is_null()) {
        item.gold_context = j.at("gold_context").get<std::string>();
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known_qa_key(it.key())) item.extra[it.key()] = it.value();
    }
    return item;
}

}  // namespace

QaItem qa_from_json(const nlohmann::json& j, const Roster& roster) {
    return qa_from_json_impl(j, &roster);
}

QaItem qa_from_json(const nlohmann::json& j) { return qa_from_json_impl(j, nullptr); }

nlohmann::json qa_to_json(const QaItem& item) {
    nlohmann::json j{{"id", item.id},
                     {"category", std::string(category_name(item.category))},
                     {"question", item.question},
                     {"options", item.options},
                     {"answer", std::string(1, static_cast<char>('A' + item.answer_index))}};
    if (item.subtype) j["subtype"] = std::string(subtype_name(*item.subtype));
    if (!item.referenced_agents.empty()) j["referenced_agents"] = item.referenced_agents;
    if (!item.referenced_intervals.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& iv : item.referenced_intervals) {
            arr.push_back({{"day", iv.start.day()},
                           {"start", iv.start.hhmmssff()},
                           {"end", iv.end.hhmmssff()}});
        }
        j["referenced_intervals"] = arr;
    }
    if (item.gold_context) j["gold_context"] = *item.gold_context;
    for (const auto& [k, v] : item.extra) j[k] = v;
    return j;
}

namespace {

std::vector<QaItem> load_qa_impl(const std::string& path, const Roster* roster) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    std::vector<QaItem> items;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            items.push_back(qa_from_json_impl(nlohmann::json::parse(line), roster));
        } catch (const std::exception& e) {
            fail(path + ":" + std::to_string(lineno), e.what());
        }
    }
    return items;
}

}  // namespace

std::vector<QaItem> load_qa(const std::string& path, const Roster& roster) {
    return load_qa_impl(path, &roster);
}

std::vector<QaItem> load_qa(const std::string& path) { return load_qa_impl(path, nullptr); }

void save_qa(const std::string& path, std::span<const QaItem> items) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    for (const auto& item : items) out << qa_to_json(item).dump() << '\n';
}

// ─── Buckets ───────────────────────────────────────────────────

std::string BucketKey::pack_string() const {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08d", start_packed);
    return buf;
}

std::string BucketKey::canonical() const { return "DAY" + std::to_string(day) + "_" + pack_string(); }

BucketKey bucket_of(const Timestamp& t, int width_minutes) {
    int aligned_minute = t.minute() / width_minutes * width_minutes;
    return BucketKey{t.day(), t.hour() * 1000000 + aligned_minute * 10000};
}

BucketMap bucket_by_interval(std::span<const CaptionRecord> records, int width_minutes) {
    if (width_minutes <= 0 || 60 % width_minutes != 0) {
        fail("bucket_by_interval", "width must divide 60, got " + std::to_string(width_minutes));
    }
    BucketMap buckets;
    for (const auto& r : records) {
        buckets[bucket_of(r.interval.start, width_minutes)][r.agent].push_back(r);
    }
    for (auto& [key, by_agent] : buckets) {
        for (auto& [agent, group] : by_agent) {
            std::stable_sort(group.begin(), group.end(),
                             [](const CaptionRecord& a, const CaptionRecord& b) {
                                 return a.interval.start < b.interval.start;
                             });
        }
    }
    return buckets;
}

CorpusStats corpus_stats(const Roster& roster, std::span<const CaptionRecord> records) {
    CorpusStats stats;
    stats.num_agents = static_cast<int>(roster.size());
    if (stats.num_agents == 0) return stats;
    double total_seconds = 0.0;
    for (const auto& r : records) {
        total_seconds += r.interval.end.seconds_of_day() - r.interval.start.seconds_of_day();
    }
    double total_hours = total_seconds / 3600.0;
    stats.hours_per_agent = total_hours / stats.num_agents;
    stats.total_hours = stats.num_agents * stats.hours_per_agent;
    return stats;
}

}  // namespace egomem
