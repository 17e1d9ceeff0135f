#pragma once

#include "fvcm/errors.hpp"
#include "fvcm/io_util.hpp"
#include "fvcm/kernels.hpp"
#include "fvcm/metric_spaces.hpp"
#include "fvcm/baselines.hpp"
#include "fvcm/training.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace fvcm {

inline constexpr const char* kModelFormatTag = "frechet-vcm/1";

enum class ResponseType { Scalar, Quantile, Spd };
enum class ModifierType { Scalar, Quantile, Spd };

inline std::string to_string(ResponseType t) {
    switch (t) {
        case ResponseType::Scalar: return "scalar";
        case ResponseType::Quantile: return "quantile";
        case ResponseType::Spd: return "spd";
    }
    return "?";
}

inline std::string to_string(ModifierType t) {
    switch (t) {
        case ModifierType::Scalar: return "scalar";
        case ModifierType::Quantile: return "quantile";
        case ModifierType::Spd: return "spd";
    }
    return "?";
}

inline ResponseType parse_response_type(const std::string& s) {
    if (s == "scalar") return ResponseType::Scalar;
    if (s == "quantile") return ResponseType::Quantile;
    if (s == "spd") return ResponseType::Spd;
    throw ValidationError("unknown response type '" + s + "'");
}

inline ModifierType parse_modifier_type(const std::string& s) {
    if (s == "scalar") return ModifierType::Scalar;
    if (s == "quantile") return ModifierType::Quantile;
    if (s == "spd") return ModifierType::Spd;
    throw ValidationError("unknown modifier type '" + s + "'");
}

/// Column layout of a dataset file: p predictor columns, then the modifier
/// block, then the response block. Dimension fields are the quantile grid
/// size (m) or matrix size (M) of the respective block; 0 for scalars.
struct DatasetSchema {
    ResponseType response = ResponseType::Scalar;
    ModifierType modifier = ModifierType::Scalar;
    int p = 0;
    int response_dim = 0;
    int modifier_dim = 0;

    int response_width() const {
        switch (response) {
            case ResponseType::Scalar: return 1;
            case ResponseType::Quantile: return response_dim;
            case ResponseType::Spd: return response_dim * response_dim;
        }
        return 0;
    }
    int modifier_width() const {
        switch (modifier) {
            case ModifierType::Scalar: return 1;
            case ModifierType::Quantile: return modifier_dim;
            case ModifierType::Spd: return modifier_dim * modifier_dim;
        }
        return 0;
    }
};

using AnyDataset =
    std::variant<TrainingSet<ScalarSpace, ScalarModifier>,
                 TrainingSet<ScalarSpace, MetricModifier<WassersteinSpace>>,
                 TrainingSet<ScalarSpace, MetricModifier<CholeskySpace>>,
                 TrainingSet<WassersteinSpace, ScalarModifier>,
                 TrainingSet<WassersteinSpace, MetricModifier<WassersteinSpace>>,
                 TrainingSet<WassersteinSpace, MetricModifier<CholeskySpace>>,
                 TrainingSet<CholeskySpace, ScalarModifier>,
                 TrainingSet<CholeskySpace, MetricModifier<WassersteinSpace>>,
                 TrainingSet<CholeskySpace, MetricModifier<CholeskySpace>>>;

template <class Modifier>
struct QuerySet {
    Eigen::MatrixXd X;
    Modifier U;
};

using AnyQuerySet = std::variant<QuerySet<ScalarModifier>, QuerySet<MetricModifier<WassersteinSpace>>,
                                 QuerySet<MetricModifier<CholeskySpace>>>;

namespace detail {

template <class Space>
constexpr ResponseType response_type_of() {
    if constexpr (std::is_same_v<Space, ScalarSpace>) return ResponseType::Scalar;
    if constexpr (std::is_same_v<Space, WassersteinSpace>) return ResponseType::Quantile;
    return ResponseType::Spd;
}

template <class Modifier>
constexpr ModifierType modifier_type_of() {
    if constexpr (std::is_same_v<Modifier, ScalarModifier>) return ModifierType::Scalar;
    if constexpr (std::is_same_v<Modifier, MetricModifier<WassersteinSpace>>)
        return ModifierType::Quantile;
    return ModifierType::Spd;
}

inline std::vector<std::string> block_columns(const std::string& prefix, ResponseType kind,
                                              int dim) {
    std::vector<std::string> cols;
    switch (kind) {
        case ResponseType::Scalar:
            cols.push_back(prefix);
            break;
        case ResponseType::Quantile:
            for (int i = 1; i <= dim; ++i) cols.push_back(prefix + "_q" + std::to_string(i));
            break;
        case ResponseType::Spd:
            for (int i = 1; i <= dim; ++i)
                for (int j = 1; j <= dim; ++j)
                    cols.push_back(prefix + "_m" + std::to_string(i) + std::to_string(j));
            break;
    }
    return cols;
}

inline std::vector<std::string> header_columns(const DatasetSchema& schema,
                                               bool with_response = true) {
    std::vector<std::string> cols;
    for (int i = 1; i <= schema.p; ++i) cols.push_back("x" + std::to_string(i));
    const auto mod = block_columns("u", static_cast<ResponseType>(schema.modifier),
                                   schema.modifier_dim);
    cols.insert(cols.end(), mod.begin(), mod.end());
    if (with_response) {
        const auto resp = block_columns("y", schema.response, schema.response_dim);
        cols.insert(cols.end(), resp.begin(), resp.end());
    }
    return cols;
}

inline QuantileFunction parse_quantile_block(std::span<const double> vals, int row,
                                             const char* what) {
    try {
        return QuantileFunction(std::vector<double>(vals.begin(), vals.end()));
    } catch (const ValidationError& e) {
        throw ValidationError("row " + std::to_string(row) + ": invalid " + what + " block: " +
                              e.what());
    }
}

inline SPDPoint parse_spd_block(std::span<const double> vals, int dim, int row, const char* what) {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = vals[static_cast<std::size_t>(i * dim + j)];
    try {
        return SPDPoint(std::move(m));
    } catch (const ValidationError& e) {
        throw ValidationError("row " + std::to_string(row) + ": invalid " + what + " block: " +
                              e.what());
    }
}

inline void append_quantile(std::vector<std::string>& out, const QuantileFunction& q) {
    for (double v : q.values()) out.push_back(format_double(v));
}

inline void append_spd(std::vector<std::string>& out, const SPDPoint& p) {
    const auto& m = p.matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(format_double(m(i, j)));
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace detail

template <class Space, class Modifier>
DatasetSchema schema_of(const TrainingSet<Space, Modifier>& ts) {
    DatasetSchema s;
    s.response = detail::response_type_of<Space>();
    s.modifier = detail::modifier_type_of<Modifier>();
    s.p = ts.p();
    if constexpr (std::is_same_v<Space, WassersteinSpace>) {
        s.response_dim = ts.Y.empty() ? 0 : ts.Y.front().size();
    } else if constexpr (std::is_same_v<Space, CholeskySpace>) {
        s.response_dim = ts.Y.empty() ? 0 : static_cast<int>(ts.Y.front().dim());
    }
    if constexpr (std::is_same_v<Modifier, MetricModifier<WassersteinSpace>>) {
        s.modifier_dim = ts.U.values.empty() ? 0 : ts.U.values.front().size();
    } else if constexpr (std::is_same_v<Modifier, MetricModifier<CholeskySpace>>) {
        s.modifier_dim = ts.U.values.empty() ? 0 : static_cast<int>(ts.U.values.front().dim());
    }
    return s;
}

inline DatasetSchema schema_of(const AnyDataset& ds) {
    return std::visit([](const auto& ts) { return schema_of(ts); }, ds);
}

template <class Space, class Modifier>
void write_dataset(std::ostream& os, const TrainingSet<Space, Modifier>& ts) {
    const DatasetSchema schema = schema_of(ts);
    const auto cols = detail::header_columns(schema);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (int r = 0; r < ts.n(); ++r) {
        std::vector<std::string> fields;
        for (int j = 0; j < ts.p(); ++j) fields.push_back(format_double(ts.X(r, j)));
        if constexpr (std::is_same_v<Modifier, ScalarModifier>) {
            fields.push_back(format_double(ts.U.values[static_cast<std::size_t>(r)]));
        } else if constexpr (std::is_same_v<Modifier, MetricModifier<WassersteinSpace>>) {
            detail::append_quantile(fields, ts.U.values[static_cast<std::size_t>(r)]);
        } else {
            detail::append_spd(fields, ts.U.values[static_cast<std::size_t>(r)]);
        }
        if constexpr (std::is_same_v<Space, ScalarSpace>) {
            fields.push_back(format_double(ts.Y[static_cast<std::size_t>(r)]));
        } else if constexpr (std::is_same_v<Space, WassersteinSpace>) {
            detail::append_quantile(fields, ts.Y[static_cast<std::size_t>(r)]);
        } else {
            detail::append_spd(fields, ts.Y[static_cast<std::size_t>(r)]);
        }
        for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
        os << '\n';
    }
}

template <class Space, class Modifier>
void write_dataset(const std::string& path, const TrainingSet<Space, Modifier>& ts) {
    auto out = detail::open_output(path);
    write_dataset(out, ts);
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

inline void write_dataset(const std::string& path, const AnyDataset& ds) {
    std::visit([&](const auto& ts) { write_dataset(path, ts); }, ds);
}

namespace detail {

struct ParsedRows {
    std::vector<std::vector<double>> rows;  // numeric fields per data row
};

inline ParsedRows read_rows(std::istream& in, const DatasetSchema& schema, bool need_response,
                            const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file, expected a header");
    const auto header = split_csv_line(line);
    const auto expect_full = header_columns(schema, true);
    const auto expect_bare = header_columns(schema, false);

    bool has_response;
    if (header == expect_full) {
        has_response = true;
    } else if (!need_response && header == expect_bare) {
        has_response = false;
    } else {
        std::string want;
        for (std::size_t i = 0; i < expect_full.size(); ++i)
            want += (i ? "," : "") + expect_full[i];
        throw ParseError(path + ": header does not match the declared schema (expected '" + want +
                         "')");
    }

    const std::size_t width = has_response ? expect_full.size() : expect_bare.size();
    ParsedRows out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != width) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(width) + " fields, got " +
                             std::to_string(fields.size()));
        }
        std::vector<double> nums;
        nums.reserve(width);
        for (const auto& f : fields) {
            nums.push_back(parse_double(f, path + ":" + std::to_string(lineno)));
        }
        out.rows.push_back(std::move(nums));
    }
    return out;
}

template <class Modifier>
Modifier build_modifier(const ParsedRows& parsed, const DatasetSchema& schema) {
    Modifier mod;
    const int p = schema.p;
    for (std::size_t r = 0; r < parsed.rows.size(); ++r) {
        std::span<const double> row(parsed.rows[r]);
        const auto block = row.subspan(static_cast<std::size_t>(p),
                                       static_cast<std::size_t>(schema.modifier_width()));
        if constexpr (std::is_same_v<Modifier, ScalarModifier>) {
            mod.values.push_back(block[0]);
        } else if constexpr (std::is_same_v<Modifier, MetricModifier<WassersteinSpace>>) {
            mod.values.push_back(parse_quantile_block(block, static_cast<int>(r) + 2, "modifier"));
        } else {
            mod.values.push_back(
                parse_spd_block(block, schema.modifier_dim, static_cast<int>(r) + 2, "modifier"));
        }
    }
    return mod;
}

template <class Space, class Modifier>
TrainingSet<Space, Modifier> build_dataset(const ParsedRows& parsed, const DatasetSchema& schema) {
    TrainingSet<Space, Modifier> ts;
    const int n = static_cast<int>(parsed.rows.size());
    ts.X.resize(n, schema.p);
    for (int r = 0; r < n; ++r) {
        for (int j = 0; j < schema.p; ++j) ts.X(r, j) = parsed.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
    }
    ts.U = build_modifier<Modifier>(parsed, schema);
    const std::size_t y_off = static_cast<std::size_t>(schema.p + schema.modifier_width());
    for (int r = 0; r < n; ++r) {
        std::span<const double> row(parsed.rows[static_cast<std::size_t>(r)]);
        const auto block = row.subspan(y_off, static_cast<std::size_t>(schema.response_width()));
        if constexpr (std::is_same_v<Space, ScalarSpace>) {
            if (!std::isfinite(block[0])) {
                throw ValidationError("row " + std::to_string(r + 2) + ": non-finite response");
            }
            ts.Y.push_back(block[0]);
        } else if constexpr (std::is_same_v<Space, WassersteinSpace>) {
            ts.Y.push_back(parse_quantile_block(block, r + 2, "response"));
        } else {
            ts.Y.push_back(parse_spd_block(block, schema.response_dim, r + 2, "response"));
        }
    }
    ts.validate();
    return ts;
}

template <class F>
auto dispatch_space_modifier(const DatasetSchema& schema, F&& f) {
    switch (schema.response) {
        case ResponseType::Scalar:
            switch (schema.modifier) {
                case ModifierType::Scalar: return f.template operator()<ScalarSpace, ScalarModifier>();
                case ModifierType::Quantile:
                    return f.template operator()<ScalarSpace, MetricModifier<WassersteinSpace>>();
                case ModifierType::Spd:
                    return f.template operator()<ScalarSpace, MetricModifier<CholeskySpace>>();
            }
            break;
        case ResponseType::Quantile:
            switch (schema.modifier) {
                case ModifierType::Scalar:
                    return f.template operator()<WassersteinSpace, ScalarModifier>();
                case ModifierType::Quantile:
                    return f.template operator()<WassersteinSpace, MetricModifier<WassersteinSpace>>();
                case ModifierType::Spd:
                    return f.template operator()<WassersteinSpace, MetricModifier<CholeskySpace>>();
            }
            break;
        case ResponseType::Spd:
            switch (schema.modifier) {
                case ModifierType::Scalar: return f.template operator()<CholeskySpace, ScalarModifier>();
                case ModifierType::Quantile:
                    return f.template operator()<CholeskySpace, MetricModifier<WassersteinSpace>>();
                case ModifierType::Spd:
                    return f.template operator()<CholeskySpace, MetricModifier<CholeskySpace>>();
            }
            break;
    }
    throw ValidationError("invalid dataset schema");
}

}  // namespace detail

/// Reads and validates a dataset against the declared schema.
inline AnyDataset read_dataset(const std::string& path, const DatasetSchema& schema) {
    auto in = detail::open_input(path);
    const auto parsed = detail::read_rows(in, schema, /*need_response=*/true, path);
    return detail::dispatch_space_modifier(
        schema, [&]<class Space, class Modifier>() -> AnyDataset {
            return detail::build_dataset<Space, Modifier>(parsed, schema);
        });
}

/// Reads prediction inputs; the response block may be present (ignored here)
/// or absent.
inline AnyQuerySet read_queries(const std::string& path, const DatasetSchema& schema) {
    auto in = detail::open_input(path);
    const auto parsed = detail::read_rows(in, schema, /*need_response=*/false, path);
    switch (schema.modifier) {
        case ModifierType::Scalar: {
            QuerySet<ScalarModifier> q;
            q.X.resize(static_cast<int>(parsed.rows.size()), schema.p);
            for (std::size_t r = 0; r < parsed.rows.size(); ++r)
                for (int j = 0; j < schema.p; ++j)
                    q.X(static_cast<Eigen::Index>(r), j) = parsed.rows[r][static_cast<std::size_t>(j)];
            q.U = detail::build_modifier<ScalarModifier>(parsed, schema);
            return q;
        }
        case ModifierType::Quantile: {
            QuerySet<MetricModifier<WassersteinSpace>> q;
            q.X.resize(static_cast<int>(parsed.rows.size()), schema.p);
            for (std::size_t r = 0; r < parsed.rows.size(); ++r)
                for (int j = 0; j < schema.p; ++j)
                    q.X(static_cast<Eigen::Index>(r), j) = parsed.rows[r][static_cast<std::size_t>(j)];
            q.U = detail::build_modifier<MetricModifier<WassersteinSpace>>(parsed, schema);
            return q;
        }
        case ModifierType::Spd: {
            QuerySet<MetricModifier<CholeskySpace>> q;
            q.X.resize(static_cast<int>(parsed.rows.size()), schema.p);
            for (std::size_t r = 0; r < parsed.rows.size(); ++r)
                for (int j = 0; j < schema.p; ++j)
                    q.X(static_cast<Eigen::Index>(r), j) = parsed.rows[r][static_cast<std::size_t>(j)];
            q.U = detail::build_modifier<MetricModifier<CholeskySpace>>(parsed, schema);
            return q;
        }
    }
    throw ValidationError("read_queries: invalid schema");
}

/// Writes a prediction column block (one response per input row).
template <class Point>
void write_predictions(std::ostream& os, const std::vector<Point>& preds) {
    if constexpr (std::is_same_v<Point, double>) {
        os << "y\n";
        for (double v : preds) os << format_double(v) << '\n';
    } else if constexpr (std::is_same_v<Point, QuantileFunction>) {
        const int m = preds.empty() ? 0 : preds.front().size();
        for (int i = 1; i <= m; ++i) os << (i > 1 ? "," : "") << "y_q" << i;
        os << '\n';
        for (const auto& q : preds) {
            for (int i = 0; i < q.size(); ++i)
                os << (i ? "," : "") << format_double(q[static_cast<std::size_t>(i)]);
            os << '\n';
        }
    } else {
        const int M = preds.empty() ? 0 : static_cast<int>(preds.front().dim());
        bool first = true;
        for (int i = 1; i <= M; ++i)
            for (int j = 1; j <= M; ++j) {
                os << (first ? "" : ",") << "y_m" << i << j;
                first = false;
            }
        os << '\n';
        for (const auto& p : preds) {
            bool f2 = true;
            for (int i = 0; i < M; ++i)
                for (int j = 0; j < M; ++j) {
                    os << (f2 ? "" : ",") << format_double(p.matrix()(i, j));
                    f2 = false;
                }
            os << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Histogram ingestion
// ---------------------------------------------------------------------------

/// A histogram over strictly increasing bin edges with nonnegative counts.
struct HistogramRecord {
    std::vector<double> edges;   // B + 1 edges
    std::vector<double> counts;  // B counts

    void validate() const {
        if (counts.empty() || edges.size() != counts.size() + 1) {
            throw ValidationError("histogram: need B+1 edges for B counts");
        }
        double total = 0.0;
        for (double c : counts) {
            if (!(c >= 0.0)) throw ValidationError("histogram: counts must be nonnegative");
            total += c;
        }
        if (!(total > 0.0)) throw ValidationError("histogram: total count must be positive");
        for (std::size_t i = 1; i < edges.size(); ++i) {
            if (!(edges[i] > edges[i - 1])) {
                throw ValidationError("histogram: edges must be strictly increasing");
            }
        }
    }
};

/// Inverts the piecewise-linear CDF (uniform mass within each bin) at the
/// interior grid t_i = (2i-1)/(2m).
inline QuantileFunction histogram_to_quantile(const HistogramRecord& hist, int m) {
    hist.validate();
    if (m < 1) throw ValidationError("histogram_to_quantile: m must be >= 1");
    const std::size_t B = hist.counts.size();
    std::vector<double> cum(B + 1, 0.0);
    double total = 0.0;
    for (double c : hist.counts) total += c;
    for (std::size_t k = 0; k < B; ++k) cum[k + 1] = cum[k] + hist.counts[k] / total;
    cum[B] = 1.0;

    const std::vector<double> grid = quantile_grid(m);
    std::vector<double> q(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        std::size_t k = 0;
        while (k + 1 < B && cum[k + 1] < t) ++k;
        while (cum[k + 1] <= cum[k]) ++k;  // skip empty bins
        const double frac = (t - cum[k]) / (cum[k + 1] - cum[k]);
        q[i] = hist.edges[k] + frac * (hist.edges[k + 1] - hist.edges[k]);
    }
    return QuantileFunction(std::move(q));
}

// ---------------------------------------------------------------------------
// Model persistence
// ---------------------------------------------------------------------------

/// A fitted model file: hyperparameters plus the training data (the
/// estimators are memory-based, so the data are part of the model).
struct Model {
    Method method = Method::Vfr;
    Weighting weighting = Weighting::LocalConstant;
    std::optional<double> bandwidth;  // absent for gfr
    std::optional<double> ridge;      // absent = automatic
    AnyDataset training;
};

namespace detail {

inline nlohmann::json dataset_to_json(const AnyDataset& ds) {
    nlohmann::json j;
    std::visit(
        [&](const auto& ts) {
            using TS = std::decay_t<decltype(ts)>;
            nlohmann::json x = nlohmann::json::array();
            for (int r = 0; r < ts.n(); ++r) {
                nlohmann::json row = nlohmann::json::array();
                for (int c = 0; c < ts.p(); ++c) row.push_back(ts.X(r, c));
                x.push_back(std::move(row));
            }
            j["x"] = std::move(x);

            nlohmann::json u = nlohmann::json::array();
            for (const auto& uv : ts.U.values) {
                if constexpr (std::is_same_v<typename TS::Query, double>) {
                    u.push_back(uv);
                } else if constexpr (std::is_same_v<typename TS::Query, QuantileFunction>) {
                    u.push_back(uv.values());
                } else {
                    nlohmann::json flat = nlohmann::json::array();
                    for (Eigen::Index i = 0; i < uv.dim(); ++i)
                        for (Eigen::Index c = 0; c < uv.dim(); ++c) flat.push_back(uv.matrix()(i, c));
                    u.push_back(std::move(flat));
                }
            }
            j["u"] = std::move(u);

            nlohmann::json y = nlohmann::json::array();
            for (const auto& yv : ts.Y) {
                if constexpr (std::is_same_v<typename TS::Point, double>) {
                    y.push_back(yv);
                } else if constexpr (std::is_same_v<typename TS::Point, QuantileFunction>) {
                    y.push_back(yv.values());
                } else {
                    nlohmann::json flat = nlohmann::json::array();
                    for (Eigen::Index i = 0; i < yv.dim(); ++i)
                        for (Eigen::Index c = 0; c < yv.dim(); ++c) flat.push_back(yv.matrix()(i, c));
                    y.push_back(std::move(flat));
                }
            }
            j["y"] = std::move(y);
        },
        ds);
    return j;
}

inline AnyDataset dataset_from_json(const nlohmann::json& j, const DatasetSchema& schema) {
    return dispatch_space_modifier(schema, [&]<class Space, class Modifier>() -> AnyDataset {
        TrainingSet<Space, Modifier> ts;
        const auto& x = j.at("x");
        const auto& u = j.at("u");
        const auto& y = j.at("y");
        const int n = static_cast<int>(x.size());
        ts.X.resize(n, schema.p);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < schema.p; ++c)
                ts.X(r, c) = x.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
        for (int r = 0; r < n; ++r) {
            const auto& uv = u.at(static_cast<std::size_t>(r));
            if constexpr (std::is_same_v<Modifier, ScalarModifier>) {
                ts.U.values.push_back(uv.get<double>());
            } else if constexpr (std::is_same_v<Modifier, MetricModifier<WassersteinSpace>>) {
                ts.U.values.push_back(QuantileFunction(uv.get<std::vector<double>>()));
            } else {
                const auto flat = uv.get<std::vector<double>>();
                ts.U.values.push_back(parse_spd_block(flat, schema.modifier_dim, r, "modifier"));
            }
            const auto& yv = y.at(static_cast<std::size_t>(r));
            if constexpr (std::is_same_v<Space, ScalarSpace>) {
                ts.Y.push_back(yv.get<double>());
            } else if constexpr (std::is_same_v<Space, WassersteinSpace>) {
                ts.Y.push_back(QuantileFunction(yv.get<std::vector<double>>()));
            } else {
                const auto flat = yv.get<std::vector<double>>();
                ts.Y.push_back(parse_spd_block(flat, schema.response_dim, r, "response"));
            }
        }
        ts.validate();
        return ts;
    });
}

}  // namespace detail

inline void write_model(const std::string& path, const Model& model) {
    const DatasetSchema schema = schema_of(model.training);
    nlohmann::json j;
    j["format"] = kModelFormatTag;
    j["method"] = to_string(model.method);
    j["kernel"] = "gaussian";
    j["weights"] = to_string(model.weighting);
    j["bandwidth"] = model.bandwidth ? nlohmann::json(*model.bandwidth) : nlohmann::json(nullptr);
    j["ridge"] = model.ridge ? nlohmann::json(*model.ridge) : nlohmann::json(nullptr);
    j["schema"] = {{"response", to_string(schema.response)},
                   {"modifier", to_string(schema.modifier)},
                   {"p", schema.p},
                   {"response_dim", schema.response_dim},
                   {"modifier_dim", schema.modifier_dim}};
    j["training"] = detail::dataset_to_json(model.training);
    auto out = detail::open_output(path);
    out << j.dump(1, '\t') << '\n';
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

inline Model read_model(const std::string& path) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid model JSON: " + e.what());
    }
    try {
        const std::string tag = j.at("format").get<std::string>();
        if (tag != kModelFormatTag) {
            throw UnsupportedVersionError(path + ": unsupported model format '" + tag +
                                          "' (this build reads '" + kModelFormatTag + "')");
        }
        Model model;
        model.method = parse_method(j.at("method").get<std::string>());
        const std::string w = j.at("weights").get<std::string>();
        if (w == "constant") model.weighting = Weighting::LocalConstant;
        else if (w == "linear") model.weighting = Weighting::LocalLinear;
        else if (w == "ball") model.weighting = Weighting::MetricBall;
        else throw ValidationError(path + ": unknown weights '" + w + "'");
        if (!j.at("bandwidth").is_null()) model.bandwidth = j.at("bandwidth").get<double>();
        if (!j.at("ridge").is_null()) model.ridge = j.at("ridge").get<double>();
        DatasetSchema schema;
        schema.response = parse_response_type(j.at("schema").at("response").get<std::string>());
        schema.modifier = parse_modifier_type(j.at("schema").at("modifier").get<std::string>());
        schema.p = j.at("schema").at("p").get<int>();
        schema.response_dim = j.at("schema").at("response_dim").get<int>();
        schema.modifier_dim = j.at("schema").at("modifier_dim").get<int>();
        model.training = detail::dataset_from_json(j.at("training"), schema);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": malformed model file: " + e.what());
    }
}

}  // namespace fvcm
