#include "gaseraser/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gaseraser {

void InterventionConfig::validate() const {
    if (!(tau > 0.0)) {
        fail(ErrorCode::BadConfig, "tau must be positive");
    }
    if (!(rho >= 0.0 && rho <= 1.0)) {
        fail(ErrorCode::BadConfig, "rho must lie in [0, 1]");
    }
    if (!(alpha >= 0.0)) {
        fail(ErrorCode::BadConfig, "alpha must be non-negative");
    }
    if (!(epsilon > 0.0)) {
        fail(ErrorCode::BadConfig, "epsilon must be positive");
    }
    if (!std::isfinite(p) || !(p > 0.0) || p > 1.0) {
        fail(ErrorCode::BadConfig, "p must lie in (0, 1) or be the no-op sentinel 1");
    }
    if (monitored_dims.empty() && sink_score_mode == SinkScoreMode::monitored_max) {
        fail(ErrorCode::BadConfig, "monitored_dims must not be empty in monitored_max mode");
    }
    for (int d : monitored_dims) {
        if (d < 0) {
            fail(ErrorCode::BadConfig, "monitored dimension indices must be non-negative");
        }
    }
    if (layer_begin < 0 || layer_begin > layer_end) {
        fail(ErrorCode::BadConfig, "layer range must satisfy 0 <= begin <= end");
    }
}

static std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

static std::string fmt_dims(const std::vector<int> & dims) {
    std::string out;
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += std::to_string(dims[i]);
    }
    return out;
}

std::string InterventionConfig::to_text() const {
    std::ostringstream os;
    os << "# gaseraser run config v1\n";
    os << "tau = " << fmt_double(tau) << "\n";
    os << "monitored_dims = " << fmt_dims(monitored_dims) << "\n";
    os << "sink_score_mode = "
       << (sink_score_mode == SinkScoreMode::monitored_max ? "monitored_max" : "full_norm")
       << "\n";
    os << "rho = " << fmt_double(rho) << "\n";
    os << "alpha = " << fmt_double(alpha) << "\n";
    os << "epsilon = " << fmt_double(epsilon) << "\n";
    os << "delta_direction = " << (directions.delta_select_high ? "ge" : "le") << "\n";
    os << "xi_direction = " << (directions.xi_select_low ? "le" : "ge") << "\n";
    os << "p = " << fmt_double(p) << "\n";
    os << "use_text_sinks = " << (use_text_sinks ? "true" : "false") << "\n";
    os << "use_image_sinks = " << (use_image_sinks ? "true" : "false") << "\n";
    os << "renormalize_rows = " << (renormalize_rows ? "true" : "false") << "\n";
    os << "head_selection = " << (head_selection ? "true" : "false") << "\n";
    os << "token_selection = " << (token_selection ? "true" : "false") << "\n";
    os << "layer_range = " << layer_begin << ":" << layer_end << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

static std::string trim(const std::string & s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) {
        return "";
    }
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

static bool parse_bool(const std::string & v, const std::string & key) {
    if (v == "true" || v == "1" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "off") {
        return false;
    }
    fail(ErrorCode::BadConfig, "bad boolean for " + key + ": " + v);
}

static double parse_double(const std::string & v, const std::string & key) {
    try {
        size_t pos = 0;
        double d   = std::stod(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument(v);
        }
        return d;
    } catch (const std::exception &) {
        fail(ErrorCode::BadConfig, "bad number for " + key + ": " + v);
    }
}

static std::vector<int> parse_dims(const std::string & v, const std::string & key) {
    std::vector<int> dims;
    if (trim(v).empty()) {
        return dims;
    }
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            dims.push_back(std::stoi(trim(item)));
        } catch (const std::exception &) {
            fail(ErrorCode::BadConfig, "bad dimension list for " + key + ": " + v);
        }
    }
    return dims;
}

InterventionConfig InterventionConfig::from_text(const std::string & text) {
    InterventionConfig cfg;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::BadConfig, "expected 'key = value', got: " + t);
        }
        const std::string key   = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (key == "tau") {
            cfg.tau = parse_double(value, key);
        } else if (key == "monitored_dims") {
            cfg.monitored_dims = parse_dims(value, key);
        } else if (key == "sink_score_mode") {
            if (value == "monitored_max") {
                cfg.sink_score_mode = SinkScoreMode::monitored_max;
            } else if (value == "full_norm") {
                cfg.sink_score_mode = SinkScoreMode::full_norm;
            } else {
                fail(ErrorCode::BadConfig, "unknown sink_score_mode: " + value);
            }
        } else if (key == "rho") {
            cfg.rho = parse_double(value, key);
        } else if (key == "alpha") {
            cfg.alpha = parse_double(value, key);
        } else if (key == "epsilon") {
            cfg.epsilon = parse_double(value, key);
        } else if (key == "delta_direction") {
            if (value != "ge" && value != "le") {
                fail(ErrorCode::BadConfig, "delta_direction must be ge or le");
            }
            cfg.directions.delta_select_high = value == "ge";
        } else if (key == "xi_direction") {
            if (value != "ge" && value != "le") {
                fail(ErrorCode::BadConfig, "xi_direction must be le or ge");
            }
            cfg.directions.xi_select_low = value == "le";
        } else if (key == "p") {
            cfg.p = parse_double(value, key);
        } else if (key == "use_text_sinks") {
            cfg.use_text_sinks = parse_bool(value, key);
        } else if (key == "use_image_sinks") {
            cfg.use_image_sinks = parse_bool(value, key);
        } else if (key == "renormalize_rows") {
            cfg.renormalize_rows = parse_bool(value, key);
        } else if (key == "head_selection") {
            cfg.head_selection = parse_bool(value, key);
        } else if (key == "token_selection") {
            cfg.token_selection = parse_bool(value, key);
        } else if (key == "layer_range") {
            const size_t colon = value.find(':');
            if (colon == std::string::npos) {
                fail(ErrorCode::BadConfig, "layer_range must look like begin:end");
            }
            try {
                cfg.layer_begin = std::stoi(trim(value.substr(0, colon)));
                cfg.layer_end   = std::stoi(trim(value.substr(colon + 1)));
            } catch (const std::exception &) {
                fail(ErrorCode::BadConfig, "bad layer_range: " + value);
            }
        } else if (key == "seed") {
            try {
                cfg.seed = std::stoull(value);
            } catch (const std::exception &) {
                fail(ErrorCode::BadConfig, "bad seed: " + value);
            }
        } else {
            fail(ErrorCode::BadConfig, "unknown config key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

void InterventionConfig::save(const std::string & path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    }
    out << to_text();
    if (!out) {
        fail(ErrorCode::IoFailure, "failed writing " + path);
    }
}

InterventionConfig InterventionConfig::load(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return from_text(os.str());
}

InterventionConfig preset_config(const std::string & name) {
    InterventionConfig cfg;
    if (name == "llava15") {
        cfg.alpha = 0.005;
    } else if (name == "llava16") {
        cfg.alpha = 0.01;
    } else if (name == "internvl2") {
        cfg.alpha = 0.1;
    } else {
        fail(ErrorCode::BadConfig, "unknown preset: " + name);
    }
    return cfg;
}

} // namespace gaseraser
