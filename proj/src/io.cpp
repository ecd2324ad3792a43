#include "varcov/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "varcov/error.hpp"

namespace varcov::io {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

bool parse_number(std::string_view cell, double& out) {
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = text.find('\n', start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Matrix matrix_from_json(const json& j, Index rows, Index cols, const char* what) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
        throw Error(ErrorKind::ParseError, std::string("model file: bad shape for ") + what);
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw Error(ErrorKind::ParseError, std::string("model file: bad shape for ") + what);
        }
        for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

Vector vector_from_json(const json& j, Index n, const char* what) {
    if (!j.is_array() || static_cast<Index>(j.size()) != n) {
        throw Error(ErrorKind::ParseError, std::string("model file: bad length for ") + what);
    }
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

}  // namespace

std::vector<std::string> default_names(Index k) {
    std::vector<std::string> names;
    for (Index i = 0; i < k; ++i) names.push_back("y" + std::to_string(i + 1));
    return names;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

Dataset parse_dataset_csv(std::string_view text) {
    Dataset ds;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::size_t line_no = 0;
    for (std::string_view raw : lines_of(text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (width == 0) width = cells.size();
        if (cells.size() != width) {
            throw Error(ErrorKind::ParseError, fmt::format("line {}: expected {} columns, found {}", line_no, width,
                                                           cells.size()));
        }
        std::vector<double> values(cells.size());
        bool numeric = true;
        for (std::size_t c = 0; c < cells.size(); ++c) numeric = numeric && parse_number(cells[c], values[c]);
        if (!numeric) {
            if (rows.empty() && ds.names.empty()) {
                for (auto cell : cells) ds.names.emplace_back(cell);
                continue;
            }
            throw Error(ErrorKind::ParseError, fmt::format("line {}: non-numeric cell", line_no));
        }
        for (double v : values) {
            if (!std::isfinite(v)) throw Error(ErrorKind::ParseError, fmt::format("line {}: non-finite value", line_no));
        }
        rows.push_back(std::move(values));
    }
    if (width == 0) throw Error(ErrorKind::ParseError, "dataset is empty");
    if (rows.size() < 2) throw Error(ErrorKind::ParseError, "dataset needs at least two rows of data");
    ds.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) ds.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    if (ds.names.empty()) ds.names = default_names(static_cast<Index>(width));
    return ds;
}

Dataset read_dataset_csv(const std::filesystem::path& path) { return parse_dataset_csv(read_text(path)); }

std::string format_dataset_csv(const Dataset& data) {
    std::string out;
    const auto names = data.names.empty() ? default_names(data.values.cols()) : data.names;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ',';
        out += names[i];
    }
    out += '\n';
    for (Index r = 0; r < data.values.rows(); ++r) {
        for (Index c = 0; c < data.values.cols(); ++c) {
            if (c) out += ',';
            out += format_double(data.values(r, c));
        }
        out += '\n';
    }
    return out;
}

std::vector<LagPosition> parse_constraints(std::string_view text) {
    std::vector<LagPosition> out;
    std::size_t line_no = 0;
    for (std::string_view raw : lines_of(text)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        long v[3] = {0, 0, 0};
        bool ok = cells.size() == 3;
        for (std::size_t i = 0; ok && i < 3; ++i) {
            const auto res = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v[i]);
            ok = res.ec == std::errc() && res.ptr == cells[i].data() + cells[i].size() && v[i] >= 1;
        }
        if (!ok) {
            throw Error(ErrorKind::ParseError,
                        fmt::format("constraints line {}: expected 'lag,row,col' with 1-indexed integers", line_no));
        }
        out.push_back({static_cast<int>(v[0]), static_cast<Index>(v[1] - 1), static_cast<Index>(v[2] - 1)});
    }
    return out;
}

std::vector<LagPosition> read_constraints(const std::filesystem::path& path) {
    return parse_constraints(read_text(path));
}

json model_to_json(const VarModel& model, const std::vector<std::string>& names) {
    json j;
    j["format"] = "varcov-model";
    j["format_version"] = kModelFormatVersion;
    j["K"] = model.K;
    j["p"] = model.p;
    j["series"] = names.empty() ? default_names(model.K) : names;
    j["mu"] = vector_to_json(model.mu);
    json a = json::array();
    for (const auto& m : model.A) a.push_back(matrix_to_json(m));
    j["A"] = std::move(a);
    if (model.noise_cov) {
        const RRCovEstimate& n = *model.noise_cov;
        j["noise"] = {{"requested_rank", n.requested_rank()},
                      {"rank", n.rank()},
                      {"U", matrix_to_json(n.U())},
                      {"lambda", vector_to_json(n.lambda())},
                      {"sigma2", n.sigma2()},
                      {"n_samples", n.n_samples()},
                      {"boundary_tie", n.boundary_tie()}};
    } else {
        j["noise"] = nullptr;
    }
    if (model.constraint) {
        json free = json::array();
        for (const auto& pos : model.constraint->positions()) free.push_back({pos.lag, pos.row + 1, pos.col + 1});
        j["constraint"] = std::move(free);
    } else {
        j["constraint"] = nullptr;
    }
    json curve = json::array();
    for (const auto& pt : model.meta.rank_curve) {
        curve.push_back({{"d", pt.d}, {"bic", pt.singular ? json(nullptr) : json(pt.bic)}, {"singular", pt.singular}});
    }
    j["fit"] = {{"procedure", model.meta.procedure},
                {"iterations", model.meta.iterations},
                {"converged", model.meta.converged},
                {"trace", model.meta.trace},
                {"max_abs_alpha_change", model.meta.max_abs_alpha_change},
                {"rank_curve", std::move(curve)}};
    return j;
}

VarModel model_from_json(const json& j, std::vector<std::string>* names) {
    try {
        if (j.value("format", std::string()) != "varcov-model") {
            throw Error(ErrorKind::ParseError, "not a varcov model file");
        }
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw Error(ErrorKind::ParseError, fmt::format("unsupported model format_version {}", version));
        }
        VarModel m;
        m.K = j.at("K").get<Index>();
        m.p = j.at("p").get<int>();
        if (m.K < 1 || m.p < 0) throw Error(ErrorKind::ParseError, "model file: invalid K or p");
        m.mu = vector_from_json(j.at("mu"), m.K, "mu");
        const json& a = j.at("A");
        if (!a.is_array() || static_cast<int>(a.size()) != m.p) throw Error(ErrorKind::ParseError, "model file: A count");
        for (const auto& am : a) m.A.push_back(matrix_from_json(am, m.K, m.K, "A"));
        if (names) {
            *names = j.at("series").get<std::vector<std::string>>();
            if (static_cast<Index>(names->size()) != m.K) throw Error(ErrorKind::ParseError, "model file: series names");
        }
        const json& n = j.at("noise");
        if (!n.is_null()) {
            const int rank = n.at("rank").get<int>();
            RRCovEstimate est(matrix_from_json(n.at("U"), m.K, rank, "U"), vector_from_json(n.at("lambda"), rank, "lambda"),
                              n.at("sigma2").get<double>(), n.at("requested_rank").get<int>(),
                              n.at("n_samples").get<Index>());
            est.set_boundary_tie(n.value("boundary_tie", false));
            m.noise_cov = std::move(est);
        }
        const json& c = j.at("constraint");
        if (!c.is_null()) {
            std::vector<LagPosition> free;
            for (const auto& t : c) {
                free.push_back({t.at(0).get<int>(), t.at(1).get<Index>() - 1, t.at(2).get<Index>() - 1});
            }
            m.constraint = ConstraintSpec::from_positions(m.K, m.p, free);
        }
        const json& f = j.at("fit");
        m.meta.procedure = f.at("procedure").get<std::string>();
        m.meta.iterations = f.at("iterations").get<int>();
        m.meta.converged = f.at("converged").get<bool>();
        m.meta.trace = f.at("trace").get<std::vector<double>>();
        m.meta.max_abs_alpha_change = f.at("max_abs_alpha_change").get<double>();
        for (const auto& pt : f.at("rank_curve")) {
            m.meta.rank_curve.push_back({pt.at("d").get<int>(), number_or_nan(pt.at("bic")), pt.at("singular").get<bool>()});
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const VarModel& model, const std::vector<std::string>& names) {
    write_text(path, model_to_json(model, names).dump(2) + "\n");
}

VarModel load_model(const std::filesystem::path& path, std::vector<std::string>* names) {
    const std::string text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, "model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j, names);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::InvalidInput, "failed writing " + path.string());
}

}  // namespace varcov::io
