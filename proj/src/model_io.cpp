#include "regime_mv/model_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace regime_mv {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ModelIoError("model file: " + what); }

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing key '") + key + "'");
    return *it;
}

double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where + " must be a number");
    return j.get<double>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& where) {
    if (!j.is_array()) fail(where + " must be an array of numbers");
    Eigen::VectorXd v(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) v[k] = as_number(j[k], where);
    return v;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where + " must be a nonempty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Eigen::MatrixXd a(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) fail(where + " rows must be equal-length arrays");
        for (std::size_t c = 0; c < cols; ++c) a(r, c) = as_number(j[r][c], where);
    }
    return a;
}

template <typename T, typename Reader>
PiecewiseConstant<T> as_table(const json& j, const std::string& where, Reader read_value) {
    if (!j.is_array() || j.empty()) fail(where + " must be a nonempty array of {t_from, value}");
    std::vector<double> t_from;
    std::vector<T> values;
    for (const auto& row : j) {
        t_from.push_back(as_number(require(row, "t_from"), where + ".t_from"));
        values.push_back(read_value(require(row, "value"), where + ".value"));
    }
    try {
        return PiecewiseConstant<T>(std::move(t_from), std::move(values));
    } catch (const std::invalid_argument& e) {
        fail(where + ": " + e.what());
    }
}

template <typename T, typename Writer>
json table_to_json(const PiecewiseConstant<T>& tab, Writer write_value) {
    json arr = json::array();
    for (std::size_t k = 0; k < tab.segments(); ++k) {
        json row;
        row["t_from"] = tab.breakpoints()[k];
        row["value"] = write_value(tab.segment_value(k));
        arr.push_back(std::move(row));
    }
    return arr;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v[k]);
    return arr;
}

json matrix_to_json(const Eigen::MatrixXd& a) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::pair<int, int> parse_pair_key(const std::string& key, int ell) {
    auto comma = key.find(',');
    if (comma == std::string::npos) fail("shock key must be 'i,j': '" + key + "'");
    int i = 0, j = 0;
    try {
        i = std::stoi(key.substr(0, comma));
        j = std::stoi(key.substr(comma + 1));
    } catch (const std::exception&) {
        fail("shock key must hold two integers: '" + key + "'");
    }
    if (i < 1 || i > ell || j < 1 || j > ell || i == j)
        fail("shock key out of range or on the diagonal: '" + key + "'");
    return {i - 1, j - 1};
}

} // namespace

MarketModel parse_model(const json& j) {
    if (!j.is_object()) fail("top level must be an object");
    MarketModel model;
    model.ell = static_cast<int>(as_number(require(j, "ell"), "ell"));
    model.m = static_cast<int>(as_number(require(j, "m"), "m"));
    model.n1 = static_cast<int>(as_number(require(j, "n1"), "n1"));
    model.horizon = as_number(require(j, "horizon"), "horizon");
    if (model.ell < 1 || model.m < 1 || model.n1 < 0) fail("ell >= 1, m >= 1, n1 >= 0 required");
    model.generator = as_matrix(require(j, "generator"), "generator");
    model.resize_tables();

    auto per_regime = [&](const char* key) -> const json& {
        const json& arr = require(j, key);
        if (!arr.is_array() || static_cast<int>(arr.size()) != model.ell)
            fail(std::string(key) + " must be an array with one table per regime");
        return arr;
    };

    const json& rate = per_regime("rate");
    const json& drift = per_regime("drift");
    const json& vol = per_regime("vol");
    for (int i = 0; i < model.ell; ++i) {
        std::string where = "regime " + std::to_string(i + 1);
        model.rate[i] = as_table<double>(rate[i], "rate " + where, as_number);
        model.drift[i] = as_table<Eigen::VectorXd>(drift[i], "drift " + where, as_vector);
        model.vol[i] = as_table<Eigen::MatrixXd>(vol[i], "vol " + where, as_matrix);
    }

    const json& comps = require(j, "jump_components");
    if (!comps.is_array()) fail("jump_components must be an array");
    for (std::size_t c = 0; c < comps.size(); ++c) {
        const json& atoms = require(comps[c], "atoms");
        if (!atoms.is_array() || atoms.empty()) fail("jump component atoms must be a nonempty array");
        JumpComponent comp;
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            std::string where = "jump component " + std::to_string(c + 1) +
                                " atom " + std::to_string(a + 1);
            JumpAtom atom;
            atom.weight = as_number(require(atoms[a], "weight"), where + ".weight");
            const json& loading = require(atoms[a], "loading");
            if (!loading.is_array() || static_cast<int>(loading.size()) != model.ell)
                fail(where + ".loading must have one table per regime");
            for (int i = 0; i < model.ell; ++i)
                atom.loading.push_back(
                    as_table<Eigen::VectorXd>(loading[i], where + " loading", as_vector));
            comp.atoms.push_back(std::move(atom));
        }
        model.jump_components.push_back(std::move(comp));
    }

    const json& shock = require(j, "shock");
    if (!shock.is_object()) fail("shock must be an object keyed by 'i,j'");
    for (auto it = shock.begin(); it != shock.end(); ++it) {
        auto [i, jx] = parse_pair_key(it.key(), model.ell);
        model.set_shock(i, jx,
                        as_table<Eigen::VectorXd>(it.value(), "shock " + it.key(), as_vector));
    }

    model.nondegeneracy_delta = as_number(require(j, "delta"), "delta");
    return model;
}

json model_to_json(const MarketModel& model) {
    json j;
    j["ell"] = model.ell;
    j["m"] = model.m;
    j["n1"] = model.n1;
    j["horizon"] = model.horizon;
    j["generator"] = matrix_to_json(model.generator);
    json rate = json::array(), drift = json::array(), vol = json::array();
    for (int i = 0; i < model.ell; ++i) {
        rate.push_back(table_to_json(model.rate[i], [](double v) { return json(v); }));
        drift.push_back(table_to_json(model.drift[i], vector_to_json));
        vol.push_back(table_to_json(model.vol[i], matrix_to_json));
    }
    j["rate"] = std::move(rate);
    j["drift"] = std::move(drift);
    j["vol"] = std::move(vol);
    json comps = json::array();
    for (const auto& comp : model.jump_components) {
        json atoms = json::array();
        for (const auto& atom : comp.atoms) {
            json ja;
            ja["weight"] = atom.weight;
            json loading = json::array();
            for (const auto& tab : atom.loading) loading.push_back(table_to_json(tab, vector_to_json));
            ja["loading"] = std::move(loading);
            atoms.push_back(std::move(ja));
        }
        comps.push_back(json{{"atoms", std::move(atoms)}});
    }
    j["jump_components"] = std::move(comps);
    json shock = json::object();
    for (int i = 0; i < model.ell; ++i)
        for (int jx = 0; jx < model.ell; ++jx)
            if (const auto* tab = model.shock_table(i, jx))
                shock[std::to_string(i + 1) + "," + std::to_string(jx + 1)] =
                    table_to_json(*tab, vector_to_json);
    j["shock"] = std::move(shock);
    j["delta"] = model.nondegeneracy_delta;
    return j;
}

MarketModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelIoError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ModelIoError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_model(j);
}

void save_model(const MarketModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelIoError("cannot open output file: " + path);
    out << model_to_json(model).dump(2) << "\n";
}

} // namespace regime_mv
