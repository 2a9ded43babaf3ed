#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "egomem/corpus.hpp"

using namespace egomem;
namespace fs = std::filesystem;

namespace {

Roster test_roster() {
    return Roster({{"A1_JAKE", "Jake"}, {"A2_ALICE", "Alice"}});
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("egomem_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p);
    for (const auto& line : lines) out << line << '\n';
}

}  // namespace

TEST_CASE("timestamp parsing, ranges and canonical form") {
    Timestamp t = Timestamp::parse(3, "12400000");
    CHECK(t.day() == 3);
    CHECK(t.hour() == 12);
    CHECK(t.minute() == 40);
    CHECK(t.canonical() == "DAY3_12400000");
    CHECK(Timestamp::parse_canonical("DAY3_12400000") == t);

    CHECK_THROWS_AS(Timestamp(0, 1, 0, 0, 0), CorpusError);
    CHECK_THROWS_AS(Timestamp(1, 24, 0, 0, 0), CorpusError);
    CHECK_THROWS_AS(Timestamp(1, 1, 60, 0, 0), CorpusError);
    CHECK_THROWS_AS(Timestamp::parse(1, "1240000"), CorpusError);
    CHECK_THROWS_AS(Timestamp::parse(1, "1240000x"), CorpusError);
}

TEST_CASE("timestamp ordering is a strict total order") {
    std::vector<Timestamp> ts = {Timestamp(1, 12, 0, 0, 0), Timestamp(1, 12, 0, 0, 1),
                                 Timestamp(2, 0, 0, 0, 0), Timestamp(1, 23, 59, 59, 99)};
    for (const auto& a : ts) {
        for (const auto& b : ts) {
            int holds = (a < b ? 1 : 0) + (a == b ? 1 : 0) + (a > b ? 1 : 0);
            CHECK(holds == 1);
        }
    }
    // Within a day, order matches lexicographic canonical strings.
    CHECK(Timestamp(1, 12, 0, 0, 0).canonical() < Timestamp(1, 13, 0, 0, 0).canonical());
}

TEST_CASE("intervals reject inversions and day crossings") {
    CHECK_THROWS_AS(make_interval(Timestamp(1, 12, 45, 0, 0), Timestamp(1, 12, 40, 0, 0)),
                    CorpusError);
    CHECK_THROWS_AS(make_interval(Timestamp(1, 12, 0, 0, 0), Timestamp(2, 12, 30, 0, 0)),
                    CorpusError);
    CHECK_NOTHROW(make_interval(Timestamp(1, 12, 0, 0, 0), Timestamp(1, 12, 30, 0, 0)));
}

TEST_CASE("load_captions maps fields and sorts") {
    TempDir dir;
    auto path = dir.path / "captions.jsonl";
    write_lines(path,
                {R"({"agent":"A1_JAKE","day":3,"start":"12400000","end":"12450000","kind":"caption","text":"Jake pours coffee"})",
                 R"({"agent":"A1_JAKE","day":3,"start":"12300000","end":"12350000","kind":"transcript","text":"earlier words"})"});
    auto records = load_captions(path.string(), test_roster());
    REQUIRE(records.size() == 2);
    CHECK(records[0].interval.start.canonical() == "DAY3_12300000");
    CHECK(records[1].interval.start.canonical() == "DAY3_12400000");
    CHECK(records[1].text == "Jake pours coffee");
    CHECK(records[1].kind == CaptionKind::VisualCaption);
    CHECK(records[0].kind == CaptionKind::Transcript);
}

TEST_CASE("load_captions on empty file returns empty list") {
    TempDir dir;
    auto path = dir.path / "captions.jsonl";
    write_lines(path, {});
    CHECK(load_captions(path.string(), test_roster()).empty());
}

TEST_CASE("load_captions reports errors with line numbers") {
    TempDir dir;
    auto path = dir.path / "captions.jsonl";

    SUBCASE("inverted interval") {
        write_lines(path,
                    {R"({"agent":"A1_JAKE","day":3,"start":"12450000","end":"12400000","kind":"caption","text":"x"})"});
        CHECK_THROWS_WITH_AS(load_captions(path.string(), test_roster()),
                             doctest::Contains("inverted interval"), CorpusError);
    }
    SUBCASE("unknown agent") {
        write_lines(path,
                    {R"({"agent":"A9_NOPE","day":1,"start":"01000000","end":"01010000","kind":"caption","text":"x"})"});
        CHECK_THROWS_WITH_AS(load_captions(path.string(), test_roster()),
                             doctest::Contains("unknown agent"), CorpusError);
    }
    SUBCASE("line number in message") {
        write_lines(path,
                    {R"({"agent":"A1_JAKE","day":1,"start":"01000000","end":"01010000","kind":"caption","text":"ok"})",
                     "{not json"});
        CHECK_THROWS_WITH_AS(load_captions(path.string(), test_roster()), doctest::Contains(":2"),
                             CorpusError);
    }
    SUBCASE("empty text") {
        write_lines(path,
                    {R"({"agent":"A1_JAKE","day":1,"start":"01000000","end":"01010000","kind":"caption","text":"  "})"});
        CHECK_THROWS_AS(load_captions(path.string(), test_roster()), CorpusError);
    }
}

TEST_CASE("caption round trip preserves records") {
    TempDir dir;
    auto path = dir.path / "captions.jsonl";
    write_lines(path,
                {R"({"agent":"A1_JAKE","day":3,"start":"12400000","end":"12450000","kind":"caption","text":"Jake pours coffee"})",
                 R"({"agent":"A2_ALICE","day":3,"start":"12410000","end":"12460000","kind":"transcript","text":"Alice replies"})"});
    auto records = load_captions(path.string(), test_roster());
    auto copy = dir.path / "copy.jsonl";
    save_captions(copy.string(), records);
    auto reloaded = load_captions(copy.string(), test_roster());
    REQUIRE(reloaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(reloaded[i].agent == records[i].agent);
        CHECK(reloaded[i].interval == records[i].interval);
        CHECK(reloaded[i].kind == records[i].kind);
        CHECK(reloaded[i].text == records[i].text);
    }
}

TEST_CASE("load_qa maps answer letters and validates") {
    TempDir dir;
    auto path = dir.path / "qa.jsonl";

    SUBCASE("letter map and category") {
        write_lines(
            path,
            {R"({"id":"q1","category":"ToM","question":"?","options":["a","b","c","d","e"],"answer":"B"})"});
        auto items = load_qa(path.string(), test_roster());
        REQUIRE(items.size() == 1);
        CHECK(items[0].answer_index == 1);
        CHECK(items[0].category == Category::ToM);
    }
    SUBCASE("wrong option count") {
        write_lines(path,
                    {R"({"id":"q1","category":"SI","question":"?","options":["a","b","c","d"],"answer":"A"})"});
        CHECK_THROWS_WITH_AS(load_qa(path.string(), test_roster()),
                             doctest::Contains("expected 5 options"), CorpusError);
    }
    SUBCASE("unknown category") {
        write_lines(path,
                    {R"({"id":"q1","category":"XX","question":"?","options":["a","b","c","d","e"],"answer":"A"})"});
        CHECK_THROWS_AS(load_qa(path.string(), test_roster()), CorpusError);
    }
    SUBCASE("unknown answer letter") {
        write_lines(path,
                    {R"({"id":"q1","category":"SI","question":"?","options":["a","b","c","d","e"],"answer":"F"})"});
        CHECK_THROWS_WITH_AS(load_qa(path.string(), test_roster()),
                             doctest::Contains("unknown answer letter"), CorpusError);
    }
    SUBCASE("unknown optional fields are preserved") {
        write_lines(
            path,
            {R"({"id":"q1","category":"SI","question":"?","options":["a","b","c","d","e"],"answer":"A","difficulty":7})"});
        auto items = load_qa(path.string(), test_roster());
        REQUIRE(items.size() == 1);
        CHECK(items[0].extra.at("difficulty") == nlohmann::json(7));
        auto j = qa_to_json(items[0]);
        CHECK(j.at("difficulty") == nlohmann::json(7));
    }
}

TEST_CASE("bucket_by_interval aligns by start containment") {
    Roster roster = test_roster();
    auto rec = [&](const std::string& agent, int day, const std::string& start,
                   const std::string& end) {
        CaptionRecord r;
        r.agent = agent;
        r.interval = make_interval(Timestamp::parse(day, start), Timestamp::parse(day, end));
        r.kind = CaptionKind::VisualCaption;
        r.text = "text";
        return r;
    };

    SUBCASE("floor alignment") {
        auto buckets = bucket_by_interval(std::vector<CaptionRecord>{rec("A1_JAKE", 3, "12430000", "12480000")}, 10);
        REQUIRE(buckets.size() == 1);
        CHECK(buckets.begin()->first.canonical() == "DAY3_12400000");
    }
    SUBCASE("two agents share a bucket") {
        std::vector<CaptionRecord> records = {rec("A1_JAKE", 3, "12410000", "12420000"),
                                              rec("A2_ALICE", 3, "12450000", "12460000")};
        auto buckets = bucket_by_interval(records, 10);
        REQUIRE(buckets.size() == 1);
        CHECK(buckets.begin()->second.size() == 2);
    }
    SUBCASE("interval spanning a boundary goes to its start bucket") {
        auto buckets = bucket_by_interval(std::vector<CaptionRecord>{rec("A1_JAKE", 3, "12390000", "12440000")}, 10);
        REQUIRE(buckets.size() == 1);
        CHECK(buckets.begin()->first.canonical() == "DAY3_12300000");
    }
    SUBCASE("empty input yields empty map") {
        CHECK(bucket_by_interval(std::vector<CaptionRecord>{}, 10).empty());
    }
    SUBCASE("width must divide 60") {
        CHECK_THROWS_AS(bucket_by_interval(std::vector<CaptionRecord>{}, 7), CorpusError);
    }
}

TEST_CASE("bucket_by_interval partitions the input") {
    Roster roster = test_roster();
    std::mt19937_64 rng(11);
    std::vector<CaptionRecord> records;
    for (int i = 0; i < 200; ++i) {
        CaptionRecord r;
        r.agent = rng() % 2 == 0 ? "A1_JAKE" : "A2_ALICE";
        int day = 1 + static_cast<int>(rng() % 3);
        int hour = static_cast<int>(rng() % 23);
        int minute = static_cast<int>(rng() % 59);
        r.interval = make_interval(Timestamp(day, hour, minute, 0, 0),
                                   Timestamp(day, hour, minute, 59, 0));
        r.kind = CaptionKind::VisualCaption;
        r.text = "r" + std::to_string(i);
        records.push_back(r);
    }
    auto buckets = bucket_by_interval(records, 10);
    std::map<std::string, int> seen;
    std::size_t total = 0;
    for (const auto& [key, by_agent] : buckets) {
        for (const auto& [agent, group] : by_agent) {
            for (const auto& r : group) {
                ++seen[r.text];
                ++total;
                CHECK(bucket_of(r.interval.start, 10) == key);
            }
        }
    }
    CHECK(total == records.size());
    for (const auto& [_, count] : seen) CHECK(count == 1);
}

TEST_CASE("corpus stats multiply out") {
    Roster roster = test_roster();
    std::vector<CaptionRecord> records;
    CaptionRecord r;
    r.agent = "A1_JAKE";
    r.interval = make_interval(Timestamp(1, 9, 0, 0, 0), Timestamp(1, 10, 0, 0, 0));
    r.kind = CaptionKind::VisualCaption;
    r.text = "x";
    records.push_back(r);
    CorpusStats stats = corpus_stats(roster, records);
    CHECK(stats.num_agents == 2);
    CHECK(stats.total_hours == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(stats.total_hours - stats.num_agents * stats.hours_per_agent) < 1e-9);
}

TEST_CASE("roster lookups") {
    Roster roster = test_roster();
    CHECK(roster.find_name("jake") != nullptr);
    CHECK(roster.find_name("JAKE")->id == "A1_JAKE");
    CHECK(roster.find_name("Jakeson") == nullptr);
    CHECK(roster.prefix(1).size() == 1);
    CHECK_THROWS_AS(Roster({{"A1", "X"}, {"A1", "Y"}}), CorpusError);
}
