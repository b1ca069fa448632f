#include "gplab/io.hpp"

#include "gplab/wick.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gplab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string canonical_config(const std::map<std::string, std::string>& kv) {
    std::ostringstream out;
    for (const auto& [k, v] : kv)
        out << k << "=" << v << "\n";
    return out.str();
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && (line[start] == ' ' || line[start] == '\t'))
            ++start;
        if (start >= line.size())
            continue;
        const auto eq = line.find('=', start);
        if (eq == std::string::npos)
            throw std::runtime_error("config line without '=': " + line);
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
            key.pop_back();
        std::size_t vstart = eq + 1;
        while (vstart < line.size() && (line[vstart] == ' ' || line[vstart] == '\t'))
            ++vstart;
        kv[key] = line.substr(vstart);
    }
    return kv;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

std::string to_csv(const GridFunction1& g) {
    std::ostringstream out;
    out << "i,t_i";
    for (std::size_t c = 1; c <= g.dim(); ++c)
        out << ",v_" << c;
    out << "\n";
    for (std::size_t i = 0; i < g.partition().size(); ++i) {
        out << i << "," << format_double(g.partition()[i]);
        for (std::size_t c = 0; c < g.dim(); ++c)
            out << "," << format_double(g.at(i)[c]);
        out << "\n";
    }
    return out.str();
}

std::string to_csv(const GridFunction2& h) {
    std::ostringstream out;
    out << "i,j,t_i,t_j";
    for (std::size_t c = 1; c <= h.dim(); ++c)
        out << ",v_" << c;
    out << "\n";
    const std::size_t np = h.partition().size();
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = i; j < np; ++j) {
            out << i << "," << j << "," << format_double(h.partition()[i]) << ","
                << format_double(h.partition()[j]);
            for (std::size_t c = 0; c < h.dim(); ++c)
                out << "," << format_double(h.at(i, j)[c]);
            out << "\n";
        }
    return out.str();
}

std::string to_csv(const ConvergenceTable& t) {
    std::ostringstream out;
    out << "level,mesh,sum,abs_err_vs_extrapolated\n";
    for (const auto& r : t.rows)
        out << r.level << "," << format_double(r.mesh) << "," << format_double(r.value) << ","
            << format_double(r.abs_err) << "\n";
    return out.str();
}

std::string to_csv_full(const ConvergenceTable& t) {
    std::ostringstream out;
    out << "level,mesh,value,ref,abs_err,observed_order\n";
    for (const auto& r : t.rows)
        out << r.level << "," << format_double(r.mesh) << "," << format_double(r.value) << ","
            << format_double(r.ref) << "," << format_double(r.abs_err) << ","
            << format_double(t.observed_order) << "\n";
    return out.str();
}

std::string lift_to_json(const RoughLift& lift) {
    nlohmann::json j;
    j["N"] = lift.levels();
    j["d"] = lift.dim();
    j["n"] = lift.partition().cells();
    j["pairs"] = lift.mode() == PairMode::Adjacent ? "adjacent" : "all";
    j["points"] = lift.partition().points();
    for (int n = 1; n <= lift.levels(); ++n) {
        std::vector<double> flat;
        const std::size_t sz = lift.tensor_size(n);
        auto push_pair = [&](std::size_t a, std::size_t b) {
            const double* v = lift.tensor(n, a, b);
            flat.insert(flat.end(), v, v + sz);
        };
        if (lift.mode() == PairMode::Adjacent) {
            for (std::size_t i = 0; i + 1 < lift.partition().size(); ++i)
                push_pair(i, i + 1);
        } else {
            for (std::size_t i = 0; i < lift.partition().size(); ++i)
                for (std::size_t b = i; b < lift.partition().size(); ++b)
                    push_pair(i, b);
        }
        j["levels"].push_back(flat);
    }
    return j.dump();
}

std::string chaos_to_json(const ChaosExpansion& c) {
    nlohmann::json j;
    j["r"] = c.rank();
    j["n_max"] = c.max_order();
    j["kernels"] = nlohmann::json::array();
    for (int n = 0; n <= c.max_order(); ++n) {
        if (c.kernel(n).empty() && n > 0)
            continue;
        nlohmann::json k;
        k["order"] = n;
        k["entries"] = nlohmann::json::array();
        for (const auto& [m, coeff] : c.kernel(n)) {
            nlohmann::json e;
            e["multiset"] = std::vector<int>(m.begin(), m.end());
            e["coeff"] = coeff;
            k["entries"].push_back(e);
        }
        j["kernels"].push_back(k);
    }
    return j.dump();
}

ChaosExpansion chaos_from_json(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    ChaosExpansion c(j.at("r").get<std::size_t>());
    for (const auto& k : j.at("kernels")) {
        const int order = k.at("order").get<int>();
        for (const auto& e : k.at("entries")) {
            const auto raw = e.at("multiset").get<std::vector<int>>();
            Multiset m(raw.begin(), raw.end());
            c.add(order, m, e.at("coeff").get<double>());
        }
    }
    return c;
}

RoughLift lift_from_json(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    const int N = j.at("N").get<int>();
    const std::size_t d = j.at("d").get<std::size_t>();
    const PairMode mode =
        j.at("pairs").get<std::string>() == "adjacent" ? PairMode::Adjacent : PairMode::All;
    Partition part(j.at("points").get<std::vector<double>>());
    RoughLift lift(part, d, N, mode);
    for (int n = 1; n <= N; ++n) {
        const auto flat = j.at("levels")[static_cast<std::size_t>(n - 1)].get<std::vector<double>>();
        const std::size_t sz = lift.tensor_size(n);
        std::size_t pos = 0;
        auto pull_pair = [&](std::size_t a, std::size_t b) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                      flat.begin() + static_cast<std::ptrdiff_t>(pos + sz), lift.tensor(n, a, b));
            pos += sz;
        };
        if (mode == PairMode::Adjacent) {
            for (std::size_t i = 0; i + 1 < part.size(); ++i)
                pull_pair(i, i + 1);
        } else {
            for (std::size_t i = 0; i < part.size(); ++i)
                for (std::size_t b = i; b < part.size(); ++b)
                    pull_pair(i, b);
        }
        if (pos != flat.size())
            throw std::runtime_error("lift_from_json: level array size mismatch");
    }
    return lift;
}

} // namespace gplab
