#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deft/dense.hpp"
#include "deft/errors.hpp"
#include "deft/events.hpp"
#include "deft/keyboard.hpp"

namespace deft {

enum class Family { TEMP, NC, CKP, DEFT };

std::string family_name(Family f);
Family parse_family(std::string_view token);  // FormatError on bad token

/// A feature cell: a value or the explicit Missing marker.
using Cell = std::optional<double>;

/// Ordered feature names with their family tags. The full schema is
/// TEMP(7), NC(6), CKP(24), DEFT(32) = 69 features; DEFT names enumerate
/// F1_distance_0_LL .. F4_distance_3_RR.
class FeatureSchema {
public:
    FeatureSchema() = default;
    FeatureSchema(std::vector<std::string> names, std::vector<Family> families);

    static const FeatureSchema& full();

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<Family>& families() const { return families_; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Family family(std::size_t i) const { return families_[i]; }

    std::optional<std::size_t> index_of(std::string_view name) const;

    /// Projection keeping schema order; unknown names raise SchemaError.
    FeatureSchema subset_by_names(const std::vector<std::string>& keep) const;
    FeatureSchema subset_by_families(const std::set<Family>& keep) const;

    /// Indices of this schema's features inside a parent schema.
    std::vector<std::size_t> indices_in(const FeatureSchema& parent) const;

    bool operator==(const FeatureSchema& other) const {
        return names_ == other.names_ && families_ == other.families_;
    }

private:
    std::vector<std::string> names_;
    std::vector<Family> families_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// One sample window's features plus identifying metadata.
struct FeatureRow {
    std::string user;
    Device device = Device::Unknown;
    int window = 0;
    std::vector<Cell> values;
};

struct FeatureMatrix {
    FeatureSchema schema;
    std::vector<FeatureRow> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_features() const { return schema.size(); }

    /// Sorted unique user ids.
    std::vector<std::string> users() const;

    /// Column projection onto a sub-schema.
    FeatureMatrix select_columns(const FeatureSchema& sub) const;
};

/// The six most common ordered key pairs, each contributing four flight
/// features.
inline constexpr std::array<std::pair<char, char>, 6> kCommonKeyPairs = {
    {{'T', 'H'}, {'I', 'S'}, {'H', 'E'}, {'A', 'P'}, {'L', 'E'}, {'C', 'O'}}};

/// TEMP: mean/std hold over the window plus mean f1..f4 over retained
/// digraphs and mean trigraph latency (down1 -> down3 over consecutive
/// triples, filtered at twice the digraph bound). Empty aggregates are
/// Missing.
std::vector<Cell> temp_features(const SampleWindow& window,
                                std::span<const DigraphRecord> records,
                                std::int64_t max_abs_flight_ms = 5000);

/// NC: words per minute (5 chars/word), backspace rate, negative-f1 and
/// negative-f2 digraph fractions, shift and caps-lock usage rates. Rates
/// are normalized by the window length.
std::vector<Cell> nc_features(const SampleWindow& window);

/// CKP: mean f1..f4 per common key pair; pairs absent from the window give
/// four Missing values.
std::vector<Cell> ckp_features(std::span<const DigraphRecord> records);

/// DEFT: mean flight i over digraphs grouped by (distance bucket 0..3,
/// hand side LL/RR). Cross-hand (LR) digraphs and pairs beyond distance 3
/// contribute nothing; empty groups are Missing.
std::vector<Cell> deft_features(std::span<const DigraphRecord> records,
                                const KeyboardLayout& layout);

/// All four families in schema order for one window.
FeatureRow extract_features(const SampleWindow& window, const KeyboardLayout& layout,
                            std::int64_t max_abs_flight_ms = 5000);

/// One row per window, schema-ordered TEMP, NC, CKP, DEFT. All windows must
/// share one device.
FeatureMatrix build_matrix(std::span<const SampleWindow> windows,
                           const KeyboardLayout& layout,
                           std::int64_t max_abs_flight_ms = 5000,
                           const FeatureSchema& schema = FeatureSchema::full());

/// Per-feature means over the given rows, ignoring Missing; a feature with
/// no observed value gets mean 0 (the all-Missing fallback).
std::vector<double> feature_means(const FeatureMatrix& matrix,
                                  std::span<const std::size_t> row_indices);

struct ImputeResult {
    FeatureMatrix matrix;
    std::vector<double> means;
};

/// Mean imputation. Without means the matrix is treated as training data
/// and means are fitted from it; with means (from a training fit) they are
/// reused verbatim. Length mismatch raises SchemaError.
ImputeResult impute(const FeatureMatrix& matrix,
                    const std::optional<std::vector<double>>& means = std::nullopt);

/// Dense conversion; any remaining Missing cell raises SchemaError.
DenseMatrix to_dense(const FeatureMatrix& matrix);

/// Dense conversion of selected rows with on-the-fly mean imputation.
DenseMatrix to_dense_imputed(const FeatureMatrix& matrix,
                             std::span<const std::size_t> row_indices,
                             std::span<const double> means);

/// CSV round-trip: header user,device,window plus schema names; Missing
/// serializes as an empty field.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& matrix);
void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& matrix);
FeatureMatrix read_matrix_csv(std::istream& in);
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace deft
