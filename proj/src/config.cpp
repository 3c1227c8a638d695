#include "polariton/config.hpp"

#include "polariton/constants.hpp"
#include "polariton/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace polariton {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = s.find(',', start);
        out.push_back(trim(std::string_view(s).substr(start, comma == std::string::npos ? std::string::npos
                                                                                       : comma - start)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

// Typed access to one section; remembers which keys were read so leftovers
// can be reported as unknown.
class SectionReader {
public:
    SectionReader(const IniDocument& doc, const std::string& name)
        : doc_(doc), name_(name), section_(&doc.sections.at(name)) {}

    bool has(const std::string& key) const { return section_->entries.count(key) != 0; }

    std::string where(const std::string& key) const {
        const auto it = section_->entries.find(key);
        return doc_.where(it == section_->entries.end() ? section_->line : it->second.line);
    }
    std::string where_section() const { return doc_.where(section_->line); }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError(where(key), "[" + name_ + "] " + key + ": " + what);
    }

    const std::string& raw(const std::string& key) {
        const auto it = section_->entries.find(key);
        if (it == section_->entries.end())
            throw ConfigError(where_section(), "[" + name_ + "] missing required key " + key);
        used_.insert(key);
        return it->second.value;
    }

    double number(const std::string& key) { return parse_number(key, raw(key)); }

    std::optional<double> optional_number(const std::string& key) {
        if (!has(key))
            return std::nullopt;
        return number(key);
    }

    std::vector<double> numbers(const std::string& key) {
        std::vector<double> out;
        for (const auto& item : split_list(raw(key)))
            out.push_back(parse_number(key, item));
        return out;
    }

    std::vector<std::string> strings(const std::string& key) {
        auto items = split_list(raw(key));
        for (const auto& s : items)
            if (s.empty())
                fail(key, "empty list item");
        return items;
    }

    long integer(const std::string& key) {
        const std::string s = raw(key);
        long v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            fail(key, "expected an integer, got \"" + s + "\"");
        return v;
    }

    bool boolean(const std::string& key) {
        const std::string s = raw(key);
        if (s == "true" || s == "yes" || s == "1")
            return true;
        if (s == "false" || s == "no" || s == "0")
            return false;
        fail(key, "expected true or false, got \"" + s + "\"");
    }

    void check_unknown() const {
        for (const auto& [key, entry] : section_->entries)
            if (!used_.count(key))
                throw ConfigError(doc_.where(entry.line), "[" + name_ + "] unknown key " + key);
    }

private:
    double parse_number(const std::string& key, const std::string& s) const {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
            fail(key, "expected a finite number, got \"" + s + "\"");
        return v;
    }

    const IniDocument& doc_;
    std::string name_;
    const IniSection* section_;
    std::set<std::string> used_;
};

void require(bool ok, SectionReader& r, const std::string& key, const std::string& what) {
    if (!ok)
        r.fail(key, what);
}

std::vector<PhotonMode> parse_photons(SectionReader& r) {
    const auto freqs = r.numbers("frequencies_THz");
    require(freqs.size() == 1 || freqs.size() == 2, r, "frequencies_THz", "one or two photon modes are supported");
    for (double f : freqs)
        require(f > 0.0, r, "frequencies_THz", "frequencies must be > 0");
    if (freqs.size() == 2)
        require(freqs[1] > freqs[0], r, "frequencies_THz", "frequencies must be ascending");
    std::vector<std::string> labels;
    if (r.has("labels")) {
        labels = r.strings("labels");
        require(labels.size() == freqs.size(), r, "labels", "need one label per photon mode");
    }
    std::vector<PhotonMode> out;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        PhotonMode p;
        p.index = static_cast<int>(i) + 1;
        p.frequency = freqs[i];
        p.label = labels.empty() ? "mode" + std::to_string(i + 1) : labels[i];
        out.push_back(p);
    }
    return out;
}

double parse_eta(SectionReader& r) {
    const double eta = r.number("eta");
    require(eta >= 0.0 && eta <= 1.0, r, "eta", "must lie in [0, 1]");
    return eta;
}

CouplingSpec parse_normalized(SectionReader& r, std::size_t n_photon) {
    CouplingSpec c;
    c.kind = CouplingSpec::Kind::normalized;
    c.ratio_11 = r.number("omega_R_11_over_omega1");
    require(c.ratio_11 >= 0.0, r, "omega_R_11_over_omega1", "must be >= 0");
    if (n_photon == 2) {
        c.ratio_2 = r.number("omega_R_2_tilde_over_omega2");
        require(c.ratio_2 >= 0.0, r, "omega_R_2_tilde_over_omega2", "must be >= 0");
        c.eta = parse_eta(r);
    }
    return c;
}

CouplingSpec parse_microscopic(SectionReader& r, std::size_t n_photon) {
    CouplingSpec c;
    c.kind = CouplingSpec::Kind::microscopic;
    c.mode_lengths_m = r.numbers("mode_lengths_m");
    require(c.mode_lengths_m.size() == n_photon, r, "mode_lengths_m", "need one value per photon mode");
    for (double v : c.mode_lengths_m)
        require(v > 0.0, r, "mode_lengths_m", "must be > 0");
    if (n_photon == 2)
        c.eta = parse_eta(r);
    return c;
}

MaterialParams parse_material(SectionReader& r) {
    MaterialParams m;
    if (auto v = r.optional_number("effective_mass_ratio")) {
        require(*v > 0.0, r, "effective_mass_ratio", "must be > 0");
        m.effective_mass_ratio = *v;
    }
    if (auto v = r.optional_number("sheet_density_m2")) {
        require(*v >= 0.0, r, "sheet_density_m2", "must be >= 0");
        m.sheet_density = *v;
    }
    if (r.has("qw_count")) {
        const long n = r.integer("qw_count");
        require(n >= 1 && n <= 10000, r, "qw_count", "must be >= 1");
        m.qw_count = static_cast<int>(n);
    }
    if (auto v = r.optional_number("background_permittivity")) {
        require(*v >= 1.0, r, "background_permittivity", "must be >= 1");
        m.background_permittivity = *v;
    }
    return m;
}

SweepSpec parse_sweep(SectionReader& r) {
    const bool thz = r.has("nu_c_start_THz") || r.has("nu_c_stop_THz") || r.has("nu_c_step_THz");
    const bool tesla = r.has("B_start_T") || r.has("B_stop_T") || r.has("B_step_T");
    if (thz == tesla)
        throw ConfigError(r.where_section(), "[sweep] give either nu_c_*_THz or B_*_T keys");
    SweepSpec s;
    s.in_tesla = tesla;
    const std::string start = tesla ? "B_start_T" : "nu_c_start_THz";
    const std::string stop = tesla ? "B_stop_T" : "nu_c_stop_THz";
    const std::string step = tesla ? "B_step_T" : "nu_c_step_THz";
    s.start = r.number(start);
    s.stop = r.number(stop);
    s.step = r.number(step);
    require(s.start >= 0.0, r, start, "must be >= 0");
    require(s.step > 0.0, r, step, "must be > 0");
    require(s.stop > s.start, r, stop, "must exceed the start value");
    require((s.stop - s.start) / s.step < 1e6, r, step, "grid would exceed 1e6 points");
    return s;
}

SpectrumSpec parse_spectrum(SectionReader& r, std::size_t n_branches) {
    SpectrumSpec s;
    s.linewidths = r.numbers("linewidths_THz");
    require(s.linewidths.size() == 1 || s.linewidths.size() == n_branches, r, "linewidths_THz",
            "give one shared value or one per branch (" + std::to_string(n_branches) + ")");
    for (double g : s.linewidths)
        require(g > 0.0, r, "linewidths_THz", "must be > 0");
    s.nu_start = r.number("nu_start_THz");
    s.nu_stop = r.number("nu_stop_THz");
    s.nu_step = r.number("nu_step_THz");
    require(s.nu_start >= 0.0, r, "nu_start_THz", "must be >= 0");
    require(s.nu_step > 0.0, r, "nu_step_THz", "must be > 0");
    require(s.nu_stop > s.nu_start, r, "nu_stop_THz", "must exceed nu_start_THz");
    require((s.nu_stop - s.nu_start) / s.nu_step < 1e6, r, "nu_step_THz", "grid would exceed 1e6 points");
    if (r.has("weight")) {
        const std::string w = r.raw("weight");
        if (w == "photon_fraction")
            s.weight_mode = WeightMode::photon_fraction;
        else if (w == "equal")
            s.weight_mode = WeightMode::equal;
        else
            r.fail("weight", "expected photon_fraction or equal, got \"" + w + "\"");
    }
    return s;
}

FitConfig parse_fit(SectionReader& r, double default_eta) {
    FitConfig f;
    f.eta = default_eta;
    if (r.has("fit_eta"))
        f.fit_eta = r.boolean("fit_eta");
    if (r.has("eta"))
        f.eta = parse_eta(r);
    if (r.has("restarts")) {
        const long n = r.integer("restarts");
        require(n >= 1 && n <= 1000, r, "restarts", "must lie in [1, 1000]");
        f.restarts = static_cast<int>(n);
    }
    if (r.has("seed")) {
        const long n = r.integer("seed");
        require(n >= 0, r, "seed", "must be >= 0");
        f.seed = static_cast<std::uint64_t>(n);
    }
    if (r.has("max_iterations")) {
        const long n = r.integer("max_iterations");
        require(n >= 1 && n <= 10000000, r, "max_iterations", "must be >= 1");
        f.max_iterations = static_cast<int>(n);
    }
    if (auto v = r.optional_number("tolerance")) {
        require(*v > 0.0, r, "tolerance", "must be > 0");
        f.tolerance = *v;
    }
    auto bound = [&](const std::string& key, double& target) {
        if (auto v = r.optional_number(key))
            target = *v;
    };
    bound("omega_R_11_over_omega1_min", f.bounds.ratio_11_min);
    bound("omega_R_11_over_omega1_max", f.bounds.ratio_11_max);
    bound("omega_R_2_tilde_over_omega2_min", f.bounds.ratio_2_min);
    bound("omega_R_2_tilde_over_omega2_max", f.bounds.ratio_2_max);
    bound("eta_min", f.bounds.eta_min);
    bound("eta_max", f.bounds.eta_max);
    try {
        f.validate();
    } catch (const DomainError& e) {
        throw ConfigError(r.where_section(), std::string("[fit] ") + e.what());
    }
    return f;
}

OverlapSpec parse_overlap(SectionReader& r, std::size_t n_photon, const std::filesystem::path& base) {
    OverlapSpec o;
    if (r.has("physical_volumes_m3")) {
        o.physical_volumes_m3 = r.numbers("physical_volumes_m3");
        for (double v : o.physical_volumes_m3)
            require(v > 0.0, r, "physical_volumes_m3", "must be > 0");
        require(o.physical_volumes_m3.size() == n_photon || o.physical_volumes_m3.size() == 1, r,
                "physical_volumes_m3", "give one value per profile");
    }
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base.empty() ? path : base / path;
    };
    if (r.has("profiles"))
        for (const auto& p : r.strings("profiles"))
            o.profiles.push_back(resolve(p));
    if (r.has("mask"))
        o.mask = resolve(r.raw("mask"));
    return o;
}

} // namespace

IniDocument parse_ini(const std::string& text, const std::string& name) {
    IniDocument doc;
    doc.name = name;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    IniSection* current = nullptr;
    std::string current_name;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty())
            continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ConfigError(doc.where(line_no), "malformed section header \"" + t + "\"");
            current_name = trim(std::string_view(t).substr(1, t.size() - 2));
            if (doc.sections.count(current_name))
                throw ConfigError(doc.where(line_no), "duplicate section [" + current_name + "]");
            current = &doc.sections[current_name];
            current->line = line_no;
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(doc.where(line_no), "expected key = value, got \"" + t + "\"");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty())
            throw ConfigError(doc.where(line_no), "empty key");
        if (!current)
            throw ConfigError(doc.where(line_no), "key " + key + " appears before any [section]");
        if (current->entries.count(key))
            throw ConfigError(doc.where(line_no), "[" + current_name + "] duplicate key " + key);
        current->entries[key] = {value, line_no};
    }
    return doc;
}

SpectrumConfig SpectrumSpec::config() const {
    SpectrumConfig c;
    c.linewidths = linewidths;
    c.frequency_grid = make_grid(nu_start, nu_stop, nu_step);
    c.weight_mode = weight_mode;
    return c;
}

CouplingSet RunConfig::couplings() const {
    if (coupling.kind == CouplingSpec::Kind::microscopic) {
        std::vector<PhotonMode> modes = photons;
        for (std::size_t i = 0; i < modes.size(); ++i)
            modes[i].effective_mode_volume = coupling.mode_lengths_m.at(i);
        return couplings_microscopic(modes, material, coupling.eta);
    }
    const double w1 = to_angular(photons.at(0).frequency);
    if (photons.size() == 1)
        return single_mode_coupling(coupling.ratio_11 * w1, photons[0].frequency);
    const double w2 = to_angular(photons.at(1).frequency);
    return couplings_from_overlap(coupling.ratio_11 * w1, coupling.ratio_2 * w2, coupling.eta,
                                  {photons[0].frequency, photons[1].frequency});
}

std::vector<double> RunConfig::nu_c_grid() const {
    if (!sweep)
        throw ConfigError(source, "missing [sweep] section");
    auto grid = make_grid(sweep->start, sweep->stop, sweep->step);
    if (sweep->in_tesla)
        for (double& v : grid)
            v = cyclotron_frequency(v, material);
    return grid;
}

RunConfig parse_config(const std::string& text, const std::string& name, const std::filesystem::path& base_dir) {
    const IniDocument doc = parse_ini(text, name);
    static const std::set<std::string> known{"photons", "coupling", "microscopic", "material",
                                             "sweep",   "spectrum", "fit",         "overlap"};
    for (const auto& [section, body] : doc.sections)
        if (!known.count(section))
            throw ConfigError(doc.where(body.line), "unknown section [" + section + "]");

    RunConfig cfg;
    cfg.source = name;
    std::vector<SectionReader> readers;
    auto reader = [&](const std::string& section) -> SectionReader& { return readers.emplace_back(doc, section); };
    auto has = [&](const std::string& section) { return doc.sections.count(section) != 0; };

    if (!has("photons"))
        throw ConfigError(name, "missing required section [photons]");
    readers.reserve(8);
    cfg.photons = parse_photons(reader("photons"));

    if (has("material"))
        cfg.material = parse_material(reader("material"));

    if (has("coupling") == has("microscopic")) {
        const int line = has("microscopic") ? doc.sections.at("microscopic").line : 0;
        throw ConfigError(line ? doc.where(line) : name,
                          "exactly one of [coupling] and [microscopic] must be present");
    }
    if (has("coupling"))
        cfg.coupling = parse_normalized(reader("coupling"), cfg.photons.size());
    else
        cfg.coupling = parse_microscopic(reader("microscopic"), cfg.photons.size());

    if (has("sweep"))
        cfg.sweep = parse_sweep(reader("sweep"));
    if (has("spectrum"))
        cfg.spectrum = parse_spectrum(reader("spectrum"), 2 * cfg.photons.size());
    if (has("fit"))
        cfg.fit = parse_fit(reader("fit"), cfg.coupling.eta);
    if (has("overlap"))
        cfg.overlap = parse_overlap(reader("overlap"), cfg.photons.size(), base_dir);

    for (const auto& r : readers)
        r.check_unknown();

    // Values can be individually valid yet jointly out of range.
    try {
        cfg.couplings();
        if (cfg.sweep)
            cfg.nu_c_grid();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(name, e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string(), "cannot open config file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string(), path.parent_path());
}

} // namespace polariton
