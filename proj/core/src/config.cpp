#include "droopkit/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace droopkit {

namespace {

struct ConverterKey {
    const char* name;
    double ConverterParams::*member;
};

constexpr std::array<ConverterKey, 13> kConverterKeys{{
    {"v_nl", &ConverterParams::v_nl},
    {"e_src", &ConverterParams::e_src},
    {"r_bat", &ConverterParams::r_bat},
    {"l_ind", &ConverterParams::l_ind},
    {"r_esr", &ConverterParams::r_esr},
    {"c_out", &ConverterParams::c_out},
    {"k_vp", &ConverterParams::k_vp},
    {"k_vi", &ConverterParams::k_vi},
    {"f_i", &ConverterParams::f_i},
    {"f_v", &ConverterParams::f_v},
    {"f_lpf", &ConverterParams::f_lpf},
    {"ramp", &ConverterParams::ramp},
    {"f_sw", &ConverterParams::f_sw},
}};

struct NetworkKey {
    const char* name;
    double NetworkParams::*member;
};

constexpr std::array<NetworkKey, 3> kNetworkKeys{{
    {"l_line", &NetworkParams::l_line},
    {"r_line", &NetworkParams::r_line},
    {"c_bus", &NetworkParams::c_bus},
}};

const std::set<std::string, std::less<>> kSimKeys{
    "dt", "t_end", "decimation", "p_load", "v_ref", "droop_mode", "droop_coef",
    "i_max", "v_min", "design_power", "pm_voltage"};

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

double parse_number(std::string_view text, std::size_t line, const std::string& key) {
    text = trim(text);
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty() || !std::isfinite(v))
        throw ConfigError(line, key, "'" + key + "' expects a finite number, got '" + std::string(text) + "'");
    return v;
}

struct Entry {
    std::string value;
    std::size_t line = 0;
};

using Section = std::map<std::string, Entry, std::less<>>;

struct RawEvent {
    std::size_t line = 0;
    std::map<std::string, std::string, std::less<>> args;
};

struct RawDocument {
    std::map<std::string, Section, std::less<>> sections;
    std::map<std::string, std::size_t, std::less<>> section_lines;
    std::vector<RawEvent> events;
};

RawDocument tokenize(std::string_view text) {
    RawDocument doc;
    std::string current;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "", "malformed section header");
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (current != "converter" && current != "network" && current != "sim" && current != "events")
                throw ConfigError(line_no, current, "unknown section [" + current + "]");
            if (doc.section_lines.count(current))
                throw ConfigError(line_no, current, "duplicate section [" + current + "]");
            doc.section_lines[current] = line_no;
            doc.sections[current];
            continue;
        }
        if (current.empty()) throw ConfigError(line_no, "", "entry outside of any section");

        if (current == "events") {
            RawEvent ev;
            ev.line = line_no;
            std::size_t p = 0;
            while (p < line.size()) {
                while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
                if (p >= line.size()) break;
                auto end = line.find_first_of(" \t", p);
                if (end == std::string_view::npos) end = line.size();
                const auto tok = line.substr(p, end - p);
                p = end;
                const auto eq = tok.find('=');
                if (eq == std::string_view::npos || eq == 0)
                    throw ConfigError(line_no, std::string(tok), "event arguments must be key=value");
                std::string key(tok.substr(0, eq));
                if (ev.args.count(key)) throw ConfigError(line_no, key, "duplicate event argument '" + key + "'");
                ev.args.emplace(std::move(key), std::string(tok.substr(eq + 1)));
            }
            doc.events.push_back(std::move(ev));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, std::string(line), "expected key = value");
        std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "", "empty key");
        auto& sec = doc.sections[current];
        if (sec.count(key)) throw ConfigError(line_no, key, "duplicate key '" + key + "'");
        sec.emplace(std::move(key), Entry{std::string(value), line_no});
    }
    return doc;
}

Event parse_event(const RawEvent& raw) {
    auto take = [&](const char* key) -> std::string {
        const auto it = raw.args.find(key);
        if (it == raw.args.end())
            throw ConfigError(raw.line, key, std::string("event is missing '") + key + "'");
        return it->second;
    };
    auto number = [&](const char* key) { return parse_number(take(key), raw.line, key); };
    auto allow_only = [&](std::initializer_list<const char*> keys) {
        for (const auto& [k, v] : raw.args) {
            bool ok = false;
            for (const char* allowed : keys) ok = ok || k == allowed;
            if (!ok) throw ConfigError(raw.line, k, "unknown event argument '" + k + "'");
        }
    };

    Event ev;
    ev.t = number("t");
    const auto name = take("action");
    if (name == "set_load_power") {
        allow_only({"t", "action", "p"});
        ev.action = action::SetLoadPower{number("p")};
    } else if (name == "ramp_load_power") {
        allow_only({"t", "action", "target", "rate", "step"});
        action::RampLoadPower a{number("target"), number("rate")};
        if (raw.args.count("step")) a.step = number("step");
        ev.action = a;
    } else if (name == "set_droop") {
        allow_only({"t", "action", "mode", "coef"});
        const auto mode = parse_droop_mode(take("mode"));
        if (!mode) throw ConfigError(raw.line, "mode", "droop mode must be none, vp or vi");
        ev.action = action::SetDroop{*mode, number("coef")};
    } else if (name == "set_vref") {
        allow_only({"t", "action", "v"});
        ev.action = action::SetVref{number("v")};
    } else if (name == "enable_droop") {
        allow_only({"t", "action"});
        ev.action = action::EnableDroop{};
    } else if (name == "disable_droop") {
        allow_only({"t", "action"});
        ev.action = action::DisableDroop{};
    } else if (name == "set_current_ref") {
        allow_only({"t", "action", "i"});
        ev.action = action::SetCurrentRef{number("i")};
    } else if (name == "release_current_ref") {
        allow_only({"t", "action"});
        ev.action = action::ReleaseCurrentRef{};
    } else {
        throw ConfigError(raw.line, "action", "unknown event action '" + name + "'");
    }
    return ev;
}

std::string fmt(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

}  // namespace

Scenario parse_config(std::string_view text) {
    const auto doc = tokenize(text);
    Scenario sc;

    const auto conv_it = doc.sections.find("converter");
    if (conv_it == doc.sections.end()) throw ConfigError(0, "converter", "missing [converter] section");
    const auto& conv = conv_it->second;
    for (const auto& [key, entry] : conv) {
        bool known = false;
        for (const auto& k : kConverterKeys) known = known || key == k.name;
        if (!known) throw ConfigError(entry.line, key, "unknown key '" + key + "' in [converter]");
    }
    for (const auto& k : kConverterKeys) {
        const auto it = conv.find(k.name);
        if (it == conv.end())
            throw ConfigError(doc.section_lines.at("converter"), k.name,
                              std::string("missing required key '") + k.name + "' in [converter]");
        sc.params.*k.member = parse_number(it->second.value, it->second.line, k.name);
    }

    if (const auto it = doc.sections.find("network"); it != doc.sections.end()) {
        for (const auto& [key, entry] : it->second) {
            const NetworkKey* match = nullptr;
            for (const auto& k : kNetworkKeys)
                if (key == k.name) match = &k;
            if (!match) throw ConfigError(entry.line, key, "unknown key '" + key + "' in [network]");
            sc.network.*match->member = parse_number(entry.value, entry.line, key);
        }
    }

    const auto sim_it = doc.sections.find("sim");
    if (sim_it == doc.sections.end()) throw ConfigError(0, "sim", "missing [sim] section");
    const auto& sim = sim_it->second;
    for (const auto& [key, entry] : sim)
        if (!kSimKeys.count(key)) throw ConfigError(entry.line, key, "unknown key '" + key + "' in [sim]");
    auto required = [&](const char* key) -> const Entry& {
        const auto it = sim.find(key);
        if (it == sim.end())
            throw ConfigError(doc.section_lines.at("sim"), key,
                              std::string("missing required key '") + key + "' in [sim]");
        return it->second;
    };
    auto optional_number = [&](const char* key, double& out) {
        if (const auto it = sim.find(key); it != sim.end()) out = parse_number(it->second.value, it->second.line, key);
    };
    sc.dt = parse_number(required("dt").value, required("dt").line, "dt");
    sc.t_end = parse_number(required("t_end").value, required("t_end").line, "t_end");
    if (const auto it = sim.find("decimation"); it != sim.end()) {
        const double d = parse_number(it->second.value, it->second.line, "decimation");
        if (d != std::floor(d) || d < 1.0 || d > 1e9)
            throw ConfigError(it->second.line, "decimation", "decimation must be a positive integer");
        sc.decimation = static_cast<int>(d);
    }
    optional_number("p_load", sc.p_load);
    if (const auto it = sim.find("v_ref"); it != sim.end())
        sc.v_ref = parse_number(it->second.value, it->second.line, "v_ref");
    if (const auto it = sim.find("droop_mode"); it != sim.end()) {
        const auto mode = parse_droop_mode(it->second.value);
        if (!mode) throw ConfigError(it->second.line, "droop_mode", "droop_mode must be none, vp or vi");
        sc.droop_mode = *mode;
    }
    optional_number("droop_coef", sc.droop_coef);
    optional_number("i_max", sc.i_max);
    optional_number("v_min", sc.v_min);
    optional_number("design_power", sc.design_power);
    optional_number("pm_voltage", sc.pm_voltage);

    for (const auto& raw : doc.events) sc.events.push_back(parse_event(raw));

    // Invariants, reported against the line that set the offending key.
    const auto issues = validate(sc);
    if (!issues.empty()) {
        const auto& issue = issues.front();
        std::size_t line = 0;
        if (issue.key.rfind("events[", 0) == 0) {
            const auto idx = std::stoul(issue.key.substr(7));
            line = doc.events.at(idx).line;
        } else {
            for (const auto& [name, sec] : doc.sections)
                if (const auto it = sec.find(issue.key); it != sec.end()) line = it->second.line;
        }
        throw ConfigError(line, issue.key, issue.message);
    }
    return sc;
}

Scenario load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "", "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const Scenario& s) {
    std::ostringstream os;
    os << "[converter]\n";
    for (const auto& k : kConverterKeys) os << k.name << " = " << fmt(s.params.*k.member) << '\n';
    os << "\n[network]\n";
    for (const auto& k : kNetworkKeys) os << k.name << " = " << fmt(s.network.*k.member) << '\n';
    os << "\n[sim]\n";
    os << "dt = " << fmt(s.dt) << '\n';
    os << "t_end = " << fmt(s.t_end) << '\n';
    os << "decimation = " << s.decimation << '\n';
    os << "p_load = " << fmt(s.p_load) << '\n';
    if (s.v_ref) os << "v_ref = " << fmt(*s.v_ref) << '\n';
    os << "droop_mode = " << to_string(s.droop_mode) << '\n';
    os << "droop_coef = " << fmt(s.droop_coef) << '\n';
    os << "i_max = " << fmt(s.i_max) << '\n';
    os << "v_min = " << fmt(s.v_min) << '\n';
    os << "design_power = " << fmt(s.design_power) << '\n';
    os << "pm_voltage = " << fmt(s.pm_voltage) << '\n';
    os << "\n[events]\n";
    for (const auto& ev : s.events) {
        os << "t=" << fmt(ev.t) << " action=";
        std::visit(
            [&](const auto& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, action::SetLoadPower>) {
                    os << "set_load_power p=" << fmt(a.p);
                } else if constexpr (std::is_same_v<A, action::RampLoadPower>) {
                    os << "ramp_load_power target=" << fmt(a.target) << " rate=" << fmt(a.rate);
                    if (a.step != 0.0) os << " step=" << fmt(a.step);
                } else if constexpr (std::is_same_v<A, action::SetDroop>) {
                    os << "set_droop mode=" << to_string(a.mode) << " coef=" << fmt(a.coefficient);
                } else if constexpr (std::is_same_v<A, action::SetVref>) {
                    os << "set_vref v=" << fmt(a.v);
                } else if constexpr (std::is_same_v<A, action::EnableDroop>) {
                    os << "enable_droop";
                } else if constexpr (std::is_same_v<A, action::DisableDroop>) {
                    os << "disable_droop";
                } else if constexpr (std::is_same_v<A, action::SetCurrentRef>) {
                    os << "set_current_ref i=" << fmt(a.i);
                } else if constexpr (std::is_same_v<A, action::ReleaseCurrentRef>) {
                    os << "release_current_ref";
                }
            },
            ev.action);
        os << '\n';
    }
    return os.str();
}

}  // namespace droopkit
