#include "egomem/synth.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace egomem::synth {

namespace {

constexpr int kDays = 2;
constexpr int kStartHour = 9;
constexpr int kHours = 3;
constexpr int kBucketsPerDay = kHours * 6;  // 10-minute buckets
constexpr int kSingleItems = 12;
constexpr int kMultiItems = 8;

const std::vector<Agent>& fixture_agents() {
    static const std::vector<Agent> kAgents = {
        {"A1_JAKE", "Jake"},     {"A2_ALICE", "Alice"},     {"A3_TASHA", "Tasha"},
        {"A4_LUCIA", "Lucia"},   {"A5_KATRINA", "Katrina"}, {"A6_SHURE", "Shure"},
    };
    return kAgents;
}

// Word banks. Evidence vocabulary is unique per item and disjoint
// from the filler and distractor pools, so an option can only overlap
// retrieved context through genuinely planted sentences.

const char* kVerbs[28] = {
    "calibrated", "varnished",  "soldered",  "embroidered", "laminated", "engraved",  "welded",
    "stitched",   "glazed",     "sharpened", "threaded",    "patched",   "mounted",   "tuned",
    "wired",      "sanded",     "riveted",   "stenciled",   "buffed",    "grafted",   "lacquered",
    "braided",    "etched",     "darned",    "whittled",    "burnished", "crocheted", "reupholstered"};

const char* kAdjectives[28] = {
    "brass",   "walnut",  "ceramic", "velvet", "marble",  "wicker", "oak",        "linen",
    "granite", "bamboo",  "leather", "crimson", "amber",  "cobalt", "ivory",      "maroon",
    "olive",   "scarlet", "turquoise", "beige", "saffron", "indigo", "teal",      "lilac",
    "mustard", "sable",   "auburn",  "periwinkle"};

const char* kNouns[28] = {
    "barometer",  "birdcage",  "gramophone", "telescope",    "lantern",  "easel",
    "loom",       "compass",   "typewriter", "metronome",    "kaleidoscope", "hourglass",
    "sextant",    "abacus",    "harmonica",  "banjo",        "trellis",  "mosaic",
    "tapestry",   "chandelier", "weathervane", "spigot",     "dulcimer", "ocarina",
    "armillary",  "zoetrope",  "astrolabe",  "theremin"};

const char* kMaterials[28] = {
    "nickel", "twine",  "resin",   "felt",      "chalk",    "wax",     "foil",  "mesh",
    "cork",   "putty",  "enamel",  "gauze",     "tin",      "clay",    "rope",  "glue",
    "burlap", "parchment", "graphite", "beeswax", "flint",  "mica",    "tarp",  "jute",
    "raffia", "shellac", "suede",  "denim"};

const char* kTools[28] = {
    "tweezers", "spatula",  "chisel",  "mallet",   "pliers",  "trowel",     "clamp",
    "whisk",    "crowbar",  "wrench",  "dowel",    "stapler", "funnel",     "ladle",
    "tongs",    "rasp",     "awl",     "gimlet",   "burin",   "adze",       "froe",
    "spokeshave", "calipers", "bradawl", "riffler", "scriber", "jigsaw",    "vise"};

const char* kPlaces[14] = {"hallway",   "cellar",   "attic",     "porch",    "studio",
                           "pantry",    "workshop", "greenhouse", "stairwell", "basement",
                           "shed",      "courtyard", "rooftop",   "alcove"};

// Distractor pool: reused across items, planted nowhere.
const char* kFakeVerbs[8] = {"shredded", "bleached",  "juggled", "twirled",
                             "crumpled", "dunked",    "lassoed", "catapulted"};
const char* kFakeAdjectives[8] = {"neon", "plaid", "glittery", "zebra",
                                  "polka", "tinsel", "pixel",  "paisley"};
const char* kFakeNouns[8] = {"kazoo", "pogo",  "stilts", "unicycle",
                             "tuba",  "maraca", "yoyo",  "frisbee"};
const char* kFakeMaterials[8] = {"glitter",  "velcro",  "bubblewrap", "confetti",
                                 "playdough", "slime",  "styrofoam",  "tinfoil"};
const char* kFakeTools[8] = {"slingshot",  "boomerang", "eggbeater", "flyswatter",
                             "pinwheel",   "popgun",    "noisemaker", "squeegee"};
const char* kFakePlaces[8] = {"igloo",     "treehouse", "lighthouse", "ballroom",
                              "funhouse",  "arcade",    "carousel",   "gazebo"};

const char* kFillerVerbs[8] = {"wipes", "stacks", "rinses", "sorts",
                               "folds", "sweeps", "checks", "moves"};
const char* kFillerObjects[8] = {"plates", "chairs", "towels", "boxes",
                                 "cups",   "books",  "bags",   "shoes"};
const char* kFillerRooms[4] = {"kitchen", "lounge", "garden", "balcony"};

Timestamp bucket_start(int day, int bucket_idx) {
    return Timestamp(day, kStartHour + bucket_idx / 6, bucket_idx % 6 * 10, 0, 0);
}

std::string filler_text(const Agent& agent, int agent_idx, int day, int bucket_idx, int slot) {
    int v = (agent_idx * 7 + bucket_idx * 3 + day * 5 + slot) % 8;
    int o = (agent_idx * 5 + bucket_idx + day * 11 + slot * 3) % 8;
    int r = (agent_idx + bucket_idx * 2 + day + slot) % 4;
    if (slot == 0) {
        return agent.name + " " + kFillerVerbs[v] + " the " + kFillerObjects[o] + " in the " +
               kFillerRooms[r] + " and hums quietly";
    }
    return agent.name + " keeps tidying the " + kFillerObjects[o] + " near the " + kFillerRooms[r] +
           " door";
}

struct Slot {
    int agent_idx;
    int day;
    int bucket_idx;
};

/// Hands out distinct (agent, day, bucket) evidence slots.
class SlotAllocator {
public:
    Slot take(int agent_idx) {
        auto& cursor = next_[agent_idx];
        int day = 1 + cursor % kDays;
        int bucket_idx = 2 + cursor / kDays;
        ++cursor;
        if (bucket_idx >= kBucketsPerDay) throw std::logic_error("fixture out of evidence slots");
        return {agent_idx, day, bucket_idx};
    }

private:
    std::map<int, int> next_;
};

}  // namespace

const ItemMeta& Fixture::meta_for(const std::string& qa_id) const {
    for (const auto& m : meta) {
        if (m.qa_id == qa_id) return m;
    }
    throw std::out_of_range("no fixture metadata for " + qa_id);
}

Fixture make_fixture() {
    Fixture fixture;
    fixture.roster = Roster(fixture_agents());
    const auto& agents = fixture_agents();

    // Planted evidence sentences, keyed by (agent, day, bucket) -> text.
    std::map<std::tuple<int, int, int>, std::string> planted;
    SlotAllocator slots;

    // Single-homed items: agents 0..4 only (Shure stays evidence-free
    // so restricting to him starves every single-homed item).
    for (int s = 0; s < kSingleItems; ++s) {
        int agent_idx = s % 5;
        Slot slot = slots.take(agent_idx);
        const Agent& agent = agents[static_cast<std::size_t>(agent_idx)];

        std::string core = std::string(kVerbs[s]) + " the " + kAdjectives[s] + " " + kNouns[s] +
                           " with the " + kMaterials[s] + " " + kTools[s] + " in the " + kPlaces[s];
        std::string sentence = agent.name + " " + core;
        planted[{slot.agent_idx, slot.day, slot.bucket_idx}] = sentence;

        QaItem item;
        item.id = "q" + std::string(s + 1 < 10 ? "0" : "") + std::to_string(s + 1);
        item.category = kAllCategories[static_cast<std::size_t>(s) % 5];
        item.subtype = Subtype::SingleSpan;
        item.question = "Who " + core + "?";
        item.answer_index = 1 + s % 4;  // never A: blind ties must miss

        int fake = 0;
        for (int opt = 0; opt < 5; ++opt) {
            if (opt == item.answer_index) {
                item.options[static_cast<std::size_t>(opt)] = sentence;
                continue;
            }
            // Same skeleton as the gold option, fictional content,
            // and never Shure's name.
            const Agent& other = agents[static_cast<std::size_t>((agent_idx + 1 + opt) % 5)];
            int f = (s * 4 + fake++) % 8;
            item.options[static_cast<std::size_t>(opt)] =
                other.name + " " + kFakeVerbs[f] + " the " + kFakeAdjectives[(f + opt) % 8] + " " +
                kFakeNouns[(f + 1) % 8] + " with the " + kFakeMaterials[(f + 2) % 8] + " " +
                kFakeTools[(f + 3) % 8] + " in the " + kFakePlaces[(f + opt + 1) % 8];
        }

        Timestamp start = bucket_start(slot.day, slot.bucket_idx);
        item.referenced_agents = {agent.id};
        item.referenced_intervals = {
            make_interval(start, Timestamp(slot.day, start.hour(), start.minute() + 9, 59, 0))};
        item.gold_context = sentence;

        ItemMeta meta;
        meta.qa_id = item.id;
        meta.single_homed = true;
        meta.min_agents_required = agent_idx + 1;
        meta.evidence.push_back({agent.id, start, sentence});
        fixture.qa.push_back(std::move(item));
        fixture.meta.push_back(std::move(meta));
    }

    // Multi-agent items: evidence split across two agents. The pair
    // sequence drives the agent-count sweep thresholds.
    const int pairs[kMultiItems][2] = {{0, 1}, {0, 1}, {1, 2}, {0, 3}, {0, 3}, {2, 4}, {3, 5}, {4, 5}};
    for (int t = 0; t < kMultiItems; ++t) {
        int bank = kSingleItems + t * 2;  // two evidence vocab rows per item
        std::string cores[2];
        std::string sentences[2];
        Slot part_slots[2];
        for (int p = 0; p < 2; ++p) {
            int agent_idx = pairs[t][p];
            part_slots[p] = slots.take(agent_idx);
            const Agent& agent = agents[static_cast<std::size_t>(agent_idx)];
            cores[p] = std::string(kVerbs[bank + p]) + " the " + kAdjectives[bank + p] + " " +
                       kNouns[bank + p] + " with the " + kMaterials[bank + p] + " " + kTools[bank + p];
            sentences[p] = agent.name + " " + cores[p];
            planted[{part_slots[p].agent_idx, part_slots[p].day, part_slots[p].bucket_idx}] =
                sentences[p];
        }
        const Agent& first = agents[static_cast<std::size_t>(pairs[t][0])];
        const Agent& second = agents[static_cast<std::size_t>(pairs[t][1])];

        QaItem item;
        int number = kSingleItems + t + 1;
        item.id = "q" + std::string(number < 10 ? "0" : "") + std::to_string(number);
        item.category = kAllCategories[static_cast<std::size_t>(kSingleItems + t) % 5];
        item.subtype = Subtype::MultiSpan;
        item.question = "Who " + cores[0] + ", and who " + cores[1] + "?";
        item.answer_index = 1 + t % 4;

        std::string gold = first.name + " " + kVerbs[bank] + " the " + kNouns[bank] + " and " +
                           second.name + " " + kVerbs[bank + 1] + " the " + kNouns[bank + 1];
        // Option A is half right: the first agent's true action paired
        // with a fictional second half. With only partial evidence it
        // ties with gold and wins the tie on index.
        std::string half_right = first.name + " " + kVerbs[bank] + " the " + kNouns[bank] + " and " +
                                 second.name + " " + kFakeVerbs[t % 8] + " the " +
                                 kFakeNouns[(t + 2) % 8];
        for (int opt = 0; opt < 5; ++opt) {
            if (opt == item.answer_index) {
                item.options[static_cast<std::size_t>(opt)] = gold;
            } else if (opt == 0) {
                item.options[static_cast<std::size_t>(opt)] = half_right;
            } else {
                const Agent& x = agents[static_cast<std::size_t>((pairs[t][0] + opt + 1) % 6)];
                const Agent& y = agents[static_cast<std::size_t>((pairs[t][1] + opt + 2) % 6)];
                int f = (t * 3 + opt) % 8;
                item.options[static_cast<std::size_t>(opt)] =
                    x.name + " " + kFakeVerbs[(f + 1) % 8] + " the " + kFakeNouns[(f + 3) % 8] +
                    " and " + y.name + " " + kFakeVerbs[(f + 4) % 8] + " the " +
                    kFakeNouns[(f + 5) % 8];
            }
        }

        ItemMeta meta;
        meta.qa_id = item.id;
        meta.single_homed = false;
        meta.min_agents_required = std::max(pairs[t][0], pairs[t][1]) + 1;
        std::string gold_context;
        for (int p = 0; p < 2; ++p) {
            const Agent& agent = agents[static_cast<std::size_t>(pairs[t][p])];
            Timestamp start = bucket_start(part_slots[p].day, part_slots[p].bucket_idx);
            item.referenced_agents.push_back(agent.id);
            item.referenced_intervals.push_back(
                make_interval(start, Timestamp(start.day(), start.hour(), start.minute() + 9, 59, 0)));
            meta.evidence.push_back({agent.id, start, sentences[p]});
            if (p > 0) gold_context += "\n";
            gold_context += sentences[p];
        }
        item.gold_context = gold_context;
        fixture.qa.push_back(std::move(item));
        fixture.meta.push_back(std::move(meta));
    }

    // Captions: two five-minute records per (agent, day, bucket);
    // planted evidence replaces the second record's text.
    for (int day = 1; day <= kDays; ++day) {
        for (int bucket_idx = 0; bucket_idx < kBucketsPerDay; ++bucket_idx) {
            for (std::size_t a = 0; a < agents.size(); ++a) {
                Timestamp start = bucket_start(day, bucket_idx);
                for (int slot = 0; slot < 2; ++slot) {
                    CaptionRecord record;
                    record.agent = agents[a].id;
                    Timestamp rs(day, start.hour(), start.minute() + slot * 5, 0, 0);
                    Timestamp re(day, start.hour(), start.minute() + slot * 5 + 4, 59, 0);
                    record.interval = make_interval(rs, re);
                    record.kind = slot == 0 ? CaptionKind::VisualCaption : CaptionKind::Transcript;
                    auto it = planted.find({static_cast<int>(a), day, bucket_idx});
                    record.text = slot == 1 && it != planted.end()
                                      ? it->second
                                      : filler_text(agents[a], static_cast<int>(a), day, bucket_idx, slot);
                    fixture.captions.push_back(std::move(record));
                }
            }
        }
    }
    return fixture;
}

void write_fixture(const Fixture& fixture, const std::string& dir) {
    fs::create_directories(dir);
    fixture.roster.save_json_file((fs::path(dir) / "roster.json").string());
    save_captions((fs::path(dir) / "captions.jsonl").string(), fixture.captions);
    save_qa((fs::path(dir) / "qa.jsonl").string(), fixture.qa);

    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& meta : fixture.meta) {
        nlohmann::json evidence = nlohmann::json::array();
        for (const auto& e : meta.evidence) {
            evidence.push_back({{"agent", e.agent_id},
                                {"bucket", e.bucket_start.canonical()},
                                {"sentence", e.sentence}});
        }
        manifest.push_back({{"qa_id", meta.qa_id},
                            {"single_homed", meta.single_homed},
                            {"min_agents_required", meta.min_agents_required},
                            {"evidence", evidence}});
    }
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << '\n';
}

}  // namespace egomem::synth
