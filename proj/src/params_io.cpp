#include "swtedge/params_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <vector>

namespace swtedge {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt2(double a, double b) {
    return fmt(a) + "," + fmt(b);
}

std::string fmt4(const std::array<std::array<double, 2>, 2>& m) {
    return fmt(m[0][0]) + "," + fmt(m[0][1]) + "," + fmt(m[1][0]) + "," + fmt(m[1][1]);
}

class KeyValues {
public:
    explicit KeyValues(const std::string& text) {
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            std::string line = text.substr(start, end - start);
            start = end + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            std::size_t eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("params file line is not key=value: " + line);
            }
            std::string key = line.substr(0, eq);
            if (!entries_.emplace(key, line.substr(eq + 1)).second) {
                throw std::runtime_error("params file repeats key " + key);
            }
        }
    }

    const std::string& get(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            throw std::runtime_error("params file is missing key " + key);
        }
        return it->second;
    }

private:
    std::map<std::string, std::string> entries_;
};

double parse_double(const std::string& s, const std::string& key) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + s.size() || s.empty()) {
        throw std::runtime_error("params file has a malformed number in key " + key);
    }
    return v;
}

std::vector<double> parse_doubles(const std::string& s, std::size_t count,
                                  const std::string& key) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find(',', start);
        if (end == std::string::npos) end = s.size();
        out.push_back(parse_double(s.substr(start, end - start), key));
        start = end + 1;
        if (end == s.size()) break;
    }
    if (out.size() != count) {
        throw std::runtime_error("params file key " + key + " needs " +
                                 std::to_string(count) + " comma-separated values");
    }
    return out;
}

int parse_int(const std::string& s, const std::string& key) {
    double v = parse_double(s, key);
    int i = int(v);
    if (double(i) != v) {
        throw std::runtime_error("params file key " + key + " must be an integer");
    }
    return i;
}

}  // namespace

std::string serialize_params(const TrainedModel& model) {
    std::string out;
    out += "format=swtedge-params-v1\n";
    out += std::string("model=") + to_string(model.model) + "\n";
    out += "scales=" + std::to_string(model.scales) + "\n";
    out += "orientations=";
    for (std::size_t i = 0; i < model.orientations.size(); ++i) {
        if (i) out += ",";
        out += to_string(model.orientations[i]);
    }
    out += "\n";

    for (std::size_t i = 0; i < model.orientations.size(); ++i) {
        std::string name = to_string(model.orientations[i]);
        if (model.model == ModelKind::hmc) {
            for (int j = 1; j <= model.scales; ++j) {
                const ChainParams& p = model.chains[i][j - 1].params;
                std::string prefix = "chain." + name + "." + std::to_string(j) + ".";
                out += prefix + "initial=" + fmt2(p.initial[0], p.initial[1]) + "\n";
                out += prefix + "transition=" + fmt4(p.transition) + "\n";
                out += prefix + "sigma0=" + fmt(p.sigma0) + "\n";
                out += prefix + "b1=" + fmt(p.b1) + "\n";
            }
        } else {
            const TreeParams& p = model.trees[i].params;
            std::string prefix = "tree." + name + ".";
            out += prefix + "root_prior=" + fmt2(p.root_prior[0], p.root_prior[1]) + "\n";
            for (int d = 1; d < model.scales; ++d) {
                out += prefix + "transition." + std::to_string(d) + "=" +
                       fmt4(p.child_transition[d - 1]) + "\n";
            }
            for (int k = 0; k < model.scales; ++k) {
                out += prefix + "emission." + std::to_string(k) + "=" +
                       fmt2(p.emissions[k].sigma0, p.emissions[k].b1) + "\n";
            }
        }
    }
    return out;
}

TrainedModel parse_params(const std::string& text) {
    KeyValues kv(text);
    if (kv.get("format") != "swtedge-params-v1") {
        throw std::runtime_error("params file has an unsupported format tag");
    }

    TrainedModel model;
    model.model = parse_model(kv.get("model"));
    model.scales = parse_int(kv.get("scales"), "scales");
    if (model.scales < 1) {
        throw std::runtime_error("params file key scales must be at least 1");
    }

    const std::string& olist = kv.get("orientations");
    std::size_t start = 0;
    while (start <= olist.size()) {
        std::size_t end = olist.find(',', start);
        if (end == std::string::npos) end = olist.size();
        model.orientations.push_back(parse_orientation(olist.substr(start, end - start)));
        start = end + 1;
        if (end == olist.size()) break;
    }

    for (Orientation orient : model.orientations) {
        std::string name = to_string(orient);
        if (model.model == ModelKind::hmc) {
            std::vector<ChainBandModel> bands(std::size_t(model.scales));
            for (int j = 1; j <= model.scales; ++j) {
                std::string prefix = "chain." + name + "." + std::to_string(j) + ".";
                ChainParams& p = bands[j - 1].params;
                auto init = parse_doubles(kv.get(prefix + "initial"), 2, prefix + "initial");
                p.initial = {init[0], init[1]};
                auto tr = parse_doubles(kv.get(prefix + "transition"), 4, prefix + "transition");
                p.transition = {{{tr[0], tr[1]}, {tr[2], tr[3]}}};
                p.sigma0 = parse_double(kv.get(prefix + "sigma0"), prefix + "sigma0");
                p.b1 = parse_double(kv.get(prefix + "b1"), prefix + "b1");
                try {
                    p.validate();
                } catch (const std::invalid_argument& e) {
                    throw std::runtime_error("params file block " + prefix + " is invalid: " +
                                             e.what());
                }
            }
            model.chains.push_back(std::move(bands));
        } else {
            TreeOrientModel tm;
            TreeParams& p = tm.params;
            std::string prefix = "tree." + name + ".";
            auto root = parse_doubles(kv.get(prefix + "root_prior"), 2, prefix + "root_prior");
            p.root_prior = {root[0], root[1]};
            p.child_transition.resize(std::size_t(model.scales - 1));
            for (int d = 1; d < model.scales; ++d) {
                std::string key = prefix + "transition." + std::to_string(d);
                auto tr = parse_doubles(kv.get(key), 4, key);
                p.child_transition[d - 1] = {{{tr[0], tr[1]}, {tr[2], tr[3]}}};
            }
            p.emissions.resize(std::size_t(model.scales));
            for (int k = 0; k < model.scales; ++k) {
                std::string key = prefix + "emission." + std::to_string(k);
                auto em = parse_doubles(kv.get(key), 2, key);
                p.emissions[k] = {em[0], em[1]};
            }
            try {
                p.validate(model.scales);
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error("params file block " + prefix + " is invalid: " +
                                         e.what());
            }
            model.trees.push_back(std::move(tm));
        }
    }
    return model;
}

void save_params(const std::string& path, const TrainedModel& model) {
    std::string text = serialize_params(model);
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

TrainedModel load_params(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file(path);
    return parse_params(std::string(bytes.begin(), bytes.end()));
}

}  // namespace swtedge
