#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "deft/features.hpp"
#include "deft/ingest.hpp"
#include "deft/rng.hpp"

using namespace deft;

namespace {

SampleWindow window_from(std::vector<Keystroke> keys) {
    return SampleWindow{"u", Device::Desktop, 0, std::move(keys)};
}

std::size_t idx(const FeatureSchema& schema, const std::string& name) {
    auto i = schema.index_of(name);
    REQUIRE(i.has_value());
    return *i;
}

// Independent DEFT oracle: its own coordinate table, rounding and hand
// split, shared with nothing in the features module.
struct DeftOracle {
    std::map<char, std::pair<double, double>> pos;
    std::string left = "QWERTASDFGZXCVB";
    std::string right = "YUIOPHJKLNM";

    DeftOracle() {
        const std::string top = "QWERTYUIOP", home = "ASDFGHJKL", bottom = "ZXCVBNM";
        for (std::size_t i = 0; i < top.size(); ++i) pos[top[i]] = {double(i), 0.0};
        for (std::size_t i = 0; i < home.size(); ++i) pos[home[i]] = {double(i) + 0.25, 1.0};
        for (std::size_t i = 0; i < bottom.size(); ++i) pos[bottom[i]] = {double(i) + 0.75, 2.0};
    }

    // side: 0 = LL, 1 = RR, -1 = not a single-hand letter pair
    int side_of(const std::string& k1, const std::string& k2) const {
        if (k1.size() != 1 || k2.size() != 1) return -1;
        bool l1 = left.find(k1[0]) != std::string::npos;
        bool l2 = left.find(k2[0]) != std::string::npos;
        bool r1 = right.find(k1[0]) != std::string::npos;
        bool r2 = right.find(k2[0]) != std::string::npos;
        if (l1 && l2) return 0;
        if (r1 && r2) return 1;
        return -1;
    }

    int bucket(const std::string& k1, const std::string& k2) const {
        double dx = pos.at(k1[0]).first - pos.at(k2[0]).first;
        double dy = pos.at(k1[0]).second - pos.at(k2[0]).second;
        return static_cast<int>(std::floor(std::hypot(dx, dy) + 0.5));
    }

    std::vector<Cell> compute(const std::vector<DigraphRecord>& records) const {
        std::vector<double> sums(32, 0.0);
        std::vector<std::size_t> counts(32, 0);
        for (const auto& rec : records) {
            int side = side_of(rec.k1, rec.k2);
            if (side < 0) continue;
            int d = bucket(rec.k1, rec.k2);
            if (d > 3) continue;
            const std::int64_t flights[4] = {rec.f1, rec.f2, rec.f3, rec.f4};
            for (int i = 0; i < 4; ++i) {
                std::size_t slot = static_cast<std::size_t>(i * 8 + d * 2 + side);
                sums[slot] += static_cast<double>(flights[i]);
                counts[slot] += 1;
            }
        }
        std::vector<Cell> out(32, std::nullopt);
        for (std::size_t s = 0; s < 32; ++s)
            if (counts[s] > 0) out[s] = sums[s] / static_cast<double>(counts[s]);
        return out;
    }
};

std::vector<Keystroke> random_letter_keystrokes(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<Keystroke> keys;
    std::int64_t prev_up = 1000;
    for (std::size_t i = 0; i < n; ++i) {
        std::string key(1, static_cast<char>('A' + rng.uniform_int(26)));
        std::int64_t down =
            i == 0 ? prev_up
                   : prev_up + static_cast<std::int64_t>(rng.uniform_int(400)) - 60;
        std::int64_t hold = 30 + static_cast<std::int64_t>(rng.uniform_int(120));
        keys.push_back({key, down, down + hold});
        prev_up = down + hold;
    }
    std::stable_sort(keys.begin(), keys.end(), [](const Keystroke& a, const Keystroke& b) {
        return a.down_ts < b.down_ts;
    });
    return keys;
}

}  // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("schema layout: 7 + 6 + 24 + 32 = 69, ordered TEMP,NC,CKP,DEFT") {
    const auto& schema = FeatureSchema::full();
    REQUIRE(schema.size() == 69);
    std::map<Family, int> counts;
    for (std::size_t i = 0; i < schema.size(); ++i) counts[schema.family(i)]++;
    CHECK(counts[Family::TEMP] == 7);
    CHECK(counts[Family::NC] == 6);
    CHECK(counts[Family::CKP] == 24);
    CHECK(counts[Family::DEFT] == 32);

    // Block ordering.
    CHECK(schema.family(0) == Family::TEMP);
    CHECK(schema.family(6) == Family::TEMP);
    CHECK(schema.family(7) == Family::NC);
    CHECK(schema.family(12) == Family::NC);
    CHECK(schema.family(13) == Family::CKP);
    CHECK(schema.family(36) == Family::CKP);
    CHECK(schema.family(37) == Family::DEFT);
    CHECK(schema.family(68) == Family::DEFT);
}

TEST_CASE("DEFT names enumerate F1_distance_0_LL .. F4_distance_3_RR") {
    const auto& schema = FeatureSchema::full();
    std::vector<std::string> deft_names;
    for (std::size_t i = 0; i < schema.size(); ++i)
        if (schema.family(i) == Family::DEFT) deft_names.push_back(schema.name(i));
    REQUIRE(deft_names.size() == 32);
    CHECK(deft_names.front() == "F1_distance_0_LL");
    CHECK(deft_names.back() == "F4_distance_3_RR");
    std::size_t at = 0;
    for (int i = 1; i <= 4; ++i)
        for (int d = 0; d <= 3; ++d)
            for (std::string side : {"LL", "RR"}) {
                CHECK(deft_names[at] == "F" + std::to_string(i) + "_distance_" +
                                            std::to_string(d) + "_" + side);
                ++at;
            }
}

TEST_CASE("temp: hold statistics") {
    auto window = window_from({{"A", 0, 80}, {"S", 200, 320}});
    auto records = digraphs(window);
    auto temp = temp_features(window, records);
    CHECK(temp[0] == Cell{100.0});                       // mean of 80, 120
    CHECK(*temp[1] == doctest::Approx(28.2842712475));   // sample std
}

TEST_CASE("temp: all digraphs filtered leaves flight means Missing") {
    auto window = window_from({{"A", 0, 80}, {"S", 7000, 7090}});
    auto scan = scan_digraphs(window, 5000);
    CHECK(scan.records.empty());
    auto temp = temp_features(window, scan.records);
    for (int i = 2; i <= 5; ++i) CHECK(!temp[i].has_value());
}

TEST_CASE("temp: trigraph latency over consecutive triples") {
    auto window = window_from({{"A", 0, 40}, {"S", 100, 150}, {"D", 300, 350}});
    auto records = digraphs(window);
    auto temp = temp_features(window, records);
    CHECK(temp[6] == Cell{300.0});  // single triple, 300 - 0
}

TEST_CASE("nc: wpm over a 60 s window") {
    // 100 keystrokes spanning exactly 60 s from first down to last up.
    std::vector<Keystroke> keys;
    for (int i = 0; i < 100; ++i) {
        std::int64_t down = i * 600;
        std::int64_t up = i < 99 ? down + 100 : 60000;
        keys.push_back({"A", down, up});
    }
    auto nc = nc_features(window_from(std::move(keys)));
    CHECK(nc[0] == Cell{20.0});
}

TEST_CASE("nc: backspace rate and negative flights") {
    std::vector<Keystroke> keys;
    for (int i = 0; i < 100; ++i) {
        std::string key = i < 5 ? "BACKSPACE" : "A";
        keys.push_back({key, i * 200, i * 200 + 50});
    }
    auto nc = nc_features(window_from(std::move(keys)));
    CHECK(nc[1] == Cell{0.05});
    CHECK(nc[2] == Cell{0.0});  // no negative f1
    CHECK(nc[3] == Cell{0.0});
}

TEST_CASE("nc: zero duration gives Missing wpm") {
    auto nc = nc_features(window_from({{"A", 5, 5}}));
    CHECK(!nc[0].has_value());
}

TEST_CASE("ckp: means per pair, Missing for absent pairs") {
    std::vector<Keystroke> keys = {
        {"T", 0, 50},    {"H", 150, 200},   // T->H, f1 = 100
        {"T", 400, 450}, {"H", 590, 640},   // T->H, f1 = 140
    };
    auto window = window_from(std::move(keys));
    auto records = digraphs(window);
    auto ckp = ckp_features(records);
    REQUIRE(ckp.size() == 24);
    CHECK(ckp[0] == Cell{120.0});  // F1_TH
    // No C->O occurrence: all four CO features Missing.
    const auto& schema = FeatureSchema::full();
    std::size_t co = idx(schema, "F1_CO") - 13;  // offset into the CKP block
    for (int i = 0; i < 4; ++i) CHECK(!ckp[co + i].has_value());
}

TEST_CASE("deft: grouped means") {
    auto layout = KeyboardLayout::default_qwerty();
    std::vector<Keystroke> keys = {
        {"A", 0, 60},     {"S", 160, 220},    // A->S: distance 1 LL, f1 = 100
        {"D", 360, 420},                      // S->D: distance 1 LL, f1 = 140
        {"J", 1200, 1260},                    // D->J: LR, excluded
        {"J", 1350, 1410},                    // J->J: distance 0 RR, f1 = 90
    };
    auto window = window_from(std::move(keys));
    auto records = digraphs(window);
    auto deft = deft_features(records, layout);

    const auto& schema = FeatureSchema::full();
    std::size_t base = 37;  // first DEFT slot
    CHECK(deft[idx(schema, "F1_distance_1_LL") - base] == Cell{120.0});
    CHECK(deft[idx(schema, "F1_distance_0_RR") - base] == Cell{90.0});
    CHECK(!deft[idx(schema, "F1_distance_2_LL") - base].has_value());
    CHECK(!deft[idx(schema, "F1_distance_2_RR") - base].has_value());
}

TEST_CASE("deft: a lone cross-hand digraph contributes to no feature") {
    auto layout = KeyboardLayout::default_qwerty();
    auto window = window_from({{"T", 0, 60}, {"H", 150, 210}});
    auto records = digraphs(window);
    REQUIRE(records.size() == 1);
    auto deft = deft_features(records, layout);
    for (const auto& cell : deft) CHECK(!cell.has_value());
}

TEST_CASE("deft matches the brute-force oracle on random windows") {
    auto layout = KeyboardLayout::default_qwerty();
    DeftOracle oracle;
    for (std::uint64_t seed = 10; seed < 40; ++seed) {
        auto window = window_from(random_letter_keystrokes(seed, 100));
        auto records = digraphs(window);
        auto expected = oracle.compute(records);
        auto actual = deft_features(records, layout);
        REQUIRE(actual.size() == 32);
        for (std::size_t i = 0; i < 32; ++i) {
            CAPTURE(i);
            CHECK(actual[i].has_value() == expected[i].has_value());
            if (actual[i] && expected[i])
                CHECK(*actual[i] == doctest::Approx(*expected[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("feature extraction is shift-invariant") {
    auto keys = random_letter_keystrokes(77, 100);
    auto window = window_from(keys);
    for (auto& k : keys) {
        k.down_ts += 123456;
        k.up_ts += 123456;
    }
    auto shifted = window_from(keys);
    auto layout = KeyboardLayout::default_qwerty();
    auto a = extract_features(window, layout);
    auto b = extract_features(shifted, layout);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        CHECK(a.values[i].has_value() == b.values[i].has_value());
        if (a.values[i])
            CHECK(*a.values[i] == doctest::Approx(*b.values[i]).epsilon(1e-9));
    }
}

TEST_CASE("build_matrix: row per window, permutation-stable values") {
    auto layout = KeyboardLayout::default_qwerty();
    std::vector<SampleWindow> windows;
    for (int u = 0; u < 3; ++u) {
        auto keys = random_letter_keystrokes(200 + u, 100);
        windows.push_back({"user" + std::to_string(u), Device::Desktop, 0, keys});
    }
    auto matrix = build_matrix(windows, layout);
    REQUIRE(matrix.n_rows() == 3);
    CHECK(matrix.n_features() == 69);

    std::reverse(windows.begin(), windows.end());
    auto reversed = build_matrix(windows, layout);
    for (std::size_t r = 0; r < 3; ++r)
        CHECK(reversed.rows[r].values == matrix.rows[2 - r].values);

    windows[0].device = Device::Tablet;
    CHECK_THROWS_AS(build_matrix(windows, layout), ConfigError);
}

TEST_CASE("impute: training means, all-Missing fallback, reuse on test") {
    FeatureMatrix matrix;
    matrix.schema = FeatureSchema({"a", "b"}, {Family::TEMP, Family::TEMP});
    matrix.rows = {
        {"u1", Device::Desktop, 0, {Cell{1.0}, std::nullopt}},
        {"u1", Device::Desktop, 1, {std::nullopt, std::nullopt}},
        {"u2", Device::Desktop, 0, {Cell{3.0}, std::nullopt}},
    };
    auto fitted = impute(matrix);
    CHECK(fitted.means == std::vector<double>{2.0, 0.0});
    CHECK(fitted.matrix.rows[1].values[0] == Cell{2.0});
    CHECK(fitted.matrix.rows[0].values[1] == Cell{0.0});  // all-Missing column

    FeatureMatrix test;
    test.schema = matrix.schema;
    test.rows = {{"u3", Device::Desktop, 0, {std::nullopt, Cell{5.0}}}};
    auto applied = impute(test, fitted.means);
    CHECK(applied.matrix.rows[0].values[0] == Cell{2.0});
    CHECK(applied.matrix.rows[0].values[1] == Cell{5.0});

    CHECK_THROWS_AS(impute(test, std::vector<double>{1.0}), SchemaError);
}

TEST_CASE("csv round-trip preserves values and Missing cells") {
    auto layout = KeyboardLayout::default_qwerty();
    std::vector<SampleWindow> windows;
    for (int w = 0; w < 4; ++w) {
        auto keys = random_letter_keystrokes(300 + w, 100);
        windows.push_back({"user" + std::to_string(w % 2), Device::Mobile, w / 2, keys});
    }
    auto matrix = build_matrix(windows, layout);
    std::ostringstream out;
    write_matrix_csv(out, matrix);
    std::istringstream in(out.str());
    auto loaded = read_matrix_csv(in);
    REQUIRE(loaded.n_rows() == matrix.n_rows());
    CHECK(loaded.schema == matrix.schema);
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        CHECK(loaded.rows[r].user == matrix.rows[r].user);
        CHECK(loaded.rows[r].device == matrix.rows[r].device);
        CHECK(loaded.rows[r].window == matrix.rows[r].window);
        CHECK(loaded.rows[r].values == matrix.rows[r].values);
    }
}

TEST_SUITE_END();
