#include "deft/features.hpp"

#include "deft/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace deft {

namespace {

constexpr std::size_t kTempCount = 7;
constexpr std::size_t kNcCount = 6;
constexpr std::size_t kCkpCount = 24;
constexpr std::size_t kDeftCount = 32;

struct Accumulator {
    double sum = 0.0;
    std::size_t count = 0;

    void add(double v) {
        sum += v;
        ++count;
    }
    Cell mean() const {
        if (count == 0) return std::nullopt;
        return sum / static_cast<double>(count);
    }
};

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::TEMP: return "TEMP";
        case Family::NC: return "NC";
        case Family::CKP: return "CKP";
        case Family::DEFT: return "DEFT";
    }
    return "TEMP";
}

Family parse_family(std::string_view token) {
    std::string t;
    for (char c : token) t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (t == "TEMP") return Family::TEMP;
    if (t == "NC") return Family::NC;
    if (t == "CKP") return Family::CKP;
    if (t == "DEFT") return Family::DEFT;
    throw FormatError("unknown feature family '" + std::string(token) + "'");
}

FeatureSchema::FeatureSchema(std::vector<std::string> names,
                             std::vector<Family> families)
    : names_(std::move(names)), families_(std::move(families)) {
    if (names_.size() != families_.size())
        throw SchemaError("schema names and families differ in length");
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!index_.emplace(names_[i], i).second)
            throw SchemaError("duplicate feature name '" + names_[i] + "'");
    }
}

const FeatureSchema& FeatureSchema::full() {
    static const FeatureSchema schema = [] {
        std::vector<std::string> names;
        std::vector<Family> families;
        auto push = [&](std::string name, Family fam) {
            names.push_back(std::move(name));
            families.push_back(fam);
        };

        push("hold_mean", Family::TEMP);
        push("hold_std", Family::TEMP);
        for (int i = 1; i <= 4; ++i) push("F" + std::to_string(i) + "_mean", Family::TEMP);
        push("trigraph_mean", Family::TEMP);

        push("wpm", Family::NC);
        push("error_rate", Family::NC);
        push("neg_ud", Family::NC);
        push("neg_uu", Family::NC);
        push("shift_usage", Family::NC);
        push("capslock_usage", Family::NC);

        for (const auto& [a, b] : kCommonKeyPairs)
            for (int i = 1; i <= 4; ++i)
                push("F" + std::to_string(i) + "_" + std::string(1, a) + std::string(1, b),
                     Family::CKP);

        for (int i = 1; i <= 4; ++i)
            for (int d = 0; d <= 3; ++d)
                for (const char* side : {"LL", "RR"})
                    push("F" + std::to_string(i) + "_distance_" + std::to_string(d) +
                             "_" + side,
                         Family::DEFT);

        return FeatureSchema(std::move(names), std::move(families));
    }();
    return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

FeatureSchema FeatureSchema::subset_by_names(const std::vector<std::string>& keep) const {
    std::vector<bool> mask(size(), false);
    for (const auto& name : keep) {
        auto idx = index_of(name);
        if (!idx) throw SchemaError("feature '" + name + "' not in schema");
        mask[*idx] = true;
    }
    std::vector<std::string> names;
    std::vector<Family> families;
    for (std::size_t i = 0; i < size(); ++i) {
        if (mask[i]) {
            names.push_back(names_[i]);
            families.push_back(families_[i]);
        }
    }
    return FeatureSchema(std::move(names), std::move(families));
}

FeatureSchema FeatureSchema::subset_by_families(const std::set<Family>& keep) const {
    std::vector<std::string> names;
    std::vector<Family> families;
    for (std::size_t i = 0; i < size(); ++i) {
        if (keep.count(families_[i])) {
            names.push_back(names_[i]);
            families.push_back(families_[i]);
        }
    }
    return FeatureSchema(std::move(names), std::move(families));
}

std::vector<std::size_t> FeatureSchema::indices_in(const FeatureSchema& parent) const {
    std::vector<std::size_t> out;
    out.reserve(size());
    for (const auto& name : names_) {
        auto idx = parent.index_of(name);
        if (!idx) throw SchemaError("feature '" + name + "' not in parent schema");
        out.push_back(*idx);
    }
    return out;
}

std::vector<std::string> FeatureMatrix::users() const {
    std::vector<std::string> out;
    for (const auto& row : rows) out.push_back(row.user);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

FeatureMatrix FeatureMatrix::select_columns(const FeatureSchema& sub) const {
    auto indices = sub.indices_in(schema);
    FeatureMatrix out;
    out.schema = sub;
    out.rows.reserve(rows.size());
    for (const auto& row : rows) {
        FeatureRow projected{row.user, row.device, row.window, {}};
        projected.values.reserve(indices.size());
        for (std::size_t idx : indices) projected.values.push_back(row.values[idx]);
        out.rows.push_back(std::move(projected));
    }
    return out;
}

std::vector<Cell> temp_features(const SampleWindow& window,
                                std::span<const DigraphRecord> records,
                                std::int64_t max_abs_flight_ms) {
    std::vector<Cell> out(kTempCount, std::nullopt);
    const auto& keys = window.keystrokes;

    if (!keys.empty()) {
        double sum = 0.0;
        for (const auto& k : keys) sum += static_cast<double>(k.hold());
        double mean = sum / static_cast<double>(keys.size());
        out[0] = mean;
        if (keys.size() >= 2) {
            double ss = 0.0;
            for (const auto& k : keys) {
                double d = static_cast<double>(k.hold()) - mean;
                ss += d * d;
            }
            out[1] = std::sqrt(ss / static_cast<double>(keys.size() - 1));
        }
    }

    Accumulator flights[4];
    for (const auto& rec : records) {
        flights[0].add(static_cast<double>(rec.f1));
        flights[1].add(static_cast<double>(rec.f2));
        flights[2].add(static_cast<double>(rec.f3));
        flights[3].add(static_cast<double>(rec.f4));
    }
    for (int i = 0; i < 4; ++i) out[2 + i] = flights[i].mean();

    Accumulator trigraph;
    const std::int64_t bound = 2 * max_abs_flight_ms;
    for (std::size_t i = 2; i < keys.size(); ++i) {
        std::int64_t latency = keys[i].down_ts - keys[i - 2].down_ts;
        if (latency <= bound) trigraph.add(static_cast<double>(latency));
    }
    out[6] = trigraph.mean();

    return out;
}

std::vector<Cell> nc_features(const SampleWindow& window) {
    std::vector<Cell> out(kNcCount, std::nullopt);
    const auto& keys = window.keystrokes;
    if (keys.empty()) return out;
    const double n = static_cast<double>(keys.size());

    std::int64_t first_down = keys.front().down_ts;
    std::int64_t last_up = keys.front().up_ts;
    std::size_t backspaces = 0, shifts = 0, capslocks = 0;
    for (const auto& k : keys) {
        last_up = std::max(last_up, k.up_ts);
        if (is_backspace_key(k.key)) ++backspaces;
        if (is_shift_key(k.key)) ++shifts;
        if (is_capslock_key(k.key)) ++capslocks;
    }
    double duration_min = static_cast<double>(last_up - first_down) / 60000.0;
    if (duration_min > 0.0) out[0] = (n / 5.0) / duration_min;

    out[1] = static_cast<double>(backspaces) / n;

    if (keys.size() >= 2) {
        std::size_t neg_ud = 0, neg_uu = 0;
        for (std::size_t i = 1; i < keys.size(); ++i) {
            if (keys[i].down_ts - keys[i - 1].up_ts < 0) ++neg_ud;
            if (keys[i].up_ts - keys[i - 1].up_ts < 0) ++neg_uu;
        }
        double pairs = static_cast<double>(keys.size() - 1);
        out[2] = static_cast<double>(neg_ud) / pairs;
        out[3] = static_cast<double>(neg_uu) / pairs;
    }

    out[4] = static_cast<double>(shifts) / n;
    out[5] = static_cast<double>(capslocks) / n;
    return out;
}

std::vector<Cell> ckp_features(std::span<const DigraphRecord> records) {
    std::array<std::array<Accumulator, 4>, kCommonKeyPairs.size()> groups{};
    for (const auto& rec : records) {
        if (rec.k1.size() != 1 || rec.k2.size() != 1) continue;
        for (std::size_t p = 0; p < kCommonKeyPairs.size(); ++p) {
            if (rec.k1[0] == kCommonKeyPairs[p].first &&
                rec.k2[0] == kCommonKeyPairs[p].second) {
                groups[p][0].add(static_cast<double>(rec.f1));
                groups[p][1].add(static_cast<double>(rec.f2));
                groups[p][2].add(static_cast<double>(rec.f3));
                groups[p][3].add(static_cast<double>(rec.f4));
            }
        }
    }
    std::vector<Cell> out;
    out.reserve(kCkpCount);
    for (const auto& group : groups)
        for (const auto& acc : group) out.push_back(acc.mean());
    return out;
}

std::vector<Cell> deft_features(std::span<const DigraphRecord> records,
                                const KeyboardLayout& layout) {
    // groups[flight][distance][side], side 0 = LL, 1 = RR
    Accumulator groups[4][4][2] = {};
    for (const auto& rec : records) {
        auto hc = hand_class_opt(layout, rec.k1, rec.k2);
        if (!hc || *hc == HandClass::LR) continue;
        auto dist = key_distance_opt(layout, rec.k1, rec.k2);
        if (!dist || *dist < 0 || *dist > 3) continue;
        int side = (*hc == HandClass::LL) ? 0 : 1;
        groups[0][*dist][side].add(static_cast<double>(rec.f1));
        groups[1][*dist][side].add(static_cast<double>(rec.f2));
        groups[2][*dist][side].add(static_cast<double>(rec.f3));
        groups[3][*dist][side].add(static_cast<double>(rec.f4));
    }
    std::vector<Cell> out;
    out.reserve(kDeftCount);
    for (int i = 0; i < 4; ++i)
        for (int d = 0; d < 4; ++d)
            for (int side = 0; side < 2; ++side) out.push_back(groups[i][d][side].mean());
    return out;
}

FeatureRow extract_features(const SampleWindow& window, const KeyboardLayout& layout,
                            std::int64_t max_abs_flight_ms) {
    auto records = digraphs(window, max_abs_flight_ms);
    FeatureRow row{window.user, window.device, window.index, {}};
    row.values.reserve(FeatureSchema::full().size());
    auto append = [&](std::vector<Cell> cells) {
        for (auto& c : cells) row.values.push_back(c);
    };
    append(temp_features(window, records, max_abs_flight_ms));
    append(nc_features(window));
    append(ckp_features(records));
    append(deft_features(records, layout));
    return row;
}

FeatureMatrix build_matrix(std::span<const SampleWindow> windows,
                           const KeyboardLayout& layout,
                           std::int64_t max_abs_flight_ms,
                           const FeatureSchema& schema) {
    for (std::size_t i = 1; i < windows.size(); ++i) {
        if (windows[i].device != windows[0].device)
            throw ConfigError("build_matrix requires windows from a single device");
    }
    FeatureMatrix matrix;
    matrix.schema = FeatureSchema::full();
    matrix.rows.reserve(windows.size());
    for (const auto& window : windows)
        matrix.rows.push_back(extract_features(window, layout, max_abs_flight_ms));
    if (!(schema == FeatureSchema::full())) return matrix.select_columns(schema);
    return matrix;
}

std::vector<double> feature_means(const FeatureMatrix& matrix,
                                  std::span<const std::size_t> row_indices) {
    std::vector<double> sums(matrix.n_features(), 0.0);
    std::vector<std::size_t> counts(matrix.n_features(), 0);
    for (std::size_t r : row_indices) {
        const auto& values = matrix.rows[r].values;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (values[j]) {
                sums[j] += *values[j];
                ++counts[j];
            }
        }
    }
    std::vector<double> means(matrix.n_features(), 0.0);
    for (std::size_t j = 0; j < means.size(); ++j)
        if (counts[j] > 0) means[j] = sums[j] / static_cast<double>(counts[j]);
    return means;
}

ImputeResult impute(const FeatureMatrix& matrix,
                    const std::optional<std::vector<double>>& means) {
    std::vector<double> fill;
    if (means) {
        if (means->size() != matrix.n_features())
            throw SchemaError("imputation means length " + std::to_string(means->size()) +
                              " does not match schema size " +
                              std::to_string(matrix.n_features()));
        fill = *means;
    } else {
        std::vector<std::size_t> all(matrix.n_rows());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        fill = feature_means(matrix, all);
    }
    ImputeResult result{matrix, fill};
    for (auto& row : result.matrix.rows)
        for (std::size_t j = 0; j < row.values.size(); ++j)
            if (!row.values[j]) row.values[j] = fill[j];
    return result;
}

DenseMatrix to_dense(const FeatureMatrix& matrix) {
    DenseMatrix dense(matrix.n_rows(), matrix.n_features());
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        const auto& values = matrix.rows[r].values;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (!values[j])
                throw SchemaError("Missing value at row " + std::to_string(r) +
                                  ", feature '" + matrix.schema.name(j) + "'; impute first");
            dense.at(r, j) = *values[j];
        }
    }
    return dense;
}

DenseMatrix to_dense_imputed(const FeatureMatrix& matrix,
                             std::span<const std::size_t> row_indices,
                             std::span<const double> means) {
    if (means.size() != matrix.n_features())
        throw SchemaError("imputation means length does not match schema size");
    DenseMatrix dense(row_indices.size(), matrix.n_features());
    for (std::size_t i = 0; i < row_indices.size(); ++i) {
        const auto& values = matrix.rows[row_indices[i]].values;
        for (std::size_t j = 0; j < values.size(); ++j)
            dense.at(i, j) = values[j] ? *values[j] : means[j];
    }
    return dense;
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::vector<std::string> split_csv_row(const std::string& row, std::size_t line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        char c = row[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < row.size() && row[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(line, "unterminated quote");
    fields.push_back(cur);
    return fields;
}

}  // namespace

void write_matrix_csv(std::ostream& out, const FeatureMatrix& matrix) {
    out << "user,device,window";
    for (const auto& name : matrix.schema.names()) out << ',' << name;
    out << '\n';
    for (const auto& row : matrix.rows) {
        out << csv_escape(row.user) << ',' << device_name(row.device) << ','
            << row.window;
        for (const auto& cell : row.values) {
            out << ',';
            if (cell) out << format_double(*cell);
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& matrix) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_matrix_csv(out, matrix);
}

FeatureMatrix read_matrix_csv(std::istream& in) {
    std::string row;
    std::size_t line = 0;
    if (!std::getline(in, row)) throw ParseError(1, "empty feature CSV");
    ++line;
    auto header = split_csv_row(row, line);
    if (header.size() < 4 || header[0] != "user" || header[1] != "device" ||
        header[2] != "window")
        throw ParseError(line, "feature CSV must start with user,device,window");

    const FeatureSchema& full = FeatureSchema::full();
    std::vector<std::string> names(header.begin() + 3, header.end());
    std::vector<Family> families;
    for (const auto& name : names) {
        auto idx = full.index_of(name);
        if (!idx) throw SchemaError("unknown feature '" + name + "' in CSV header");
        families.push_back(full.family(*idx));
    }

    FeatureMatrix matrix;
    matrix.schema = FeatureSchema(std::move(names), std::move(families));
    while (std::getline(in, row)) {
        ++line;
        if (row.empty() || row == "\r") continue;
        auto fields = split_csv_row(row, line);
        if (fields.size() != header.size())
            throw ParseError(line, "expected " + std::to_string(header.size()) +
                                       " fields, got " + std::to_string(fields.size()));
        FeatureRow fr;
        fr.user = fields[0];
        fr.device = parse_device(fields[1]);
        try {
            fr.window = std::stoi(fields[2]);
        } catch (const std::exception&) {
            throw ParseError(line, "bad window ordinal '" + fields[2] + "'");
        }
        fr.values.reserve(fields.size() - 3);
        for (std::size_t j = 3; j < fields.size(); ++j) {
            if (fields[j].empty()) {
                fr.values.push_back(std::nullopt);
            } else {
                try {
                    fr.values.push_back(std::stod(fields[j]));
                } catch (const std::exception&) {
                    throw ParseError(line, "bad numeric field '" + fields[j] + "'");
                }
            }
        }
        matrix.rows.push_back(std::move(fr));
    }
    return matrix;
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_matrix_csv(in);
}

}  // namespace deft
