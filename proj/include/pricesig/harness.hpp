#ifndef PRICESIG_HARNESS_HPP
#define PRICESIG_HARNESS_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "variants.hpp"

namespace pricesig {

inline const char* tool_version() { return "1.0.0"; }

// Exit codes: 0 done, 1 config problem (thrown as ConfigError before any
// artifact is written), 2 market failed validation (report and parameter echo
// are still written), 3 internal invariant broken.
struct HarnessResult {
    int exit_code = 0;
    std::string summary;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StructuralError("cannot write " + path.string());
    out << content;
}

inline std::string fmt(double x) { return format_number(x); }

inline const char* csv_header() {
    return "firm_symmetric,P_G,P_B,pi_G,pi_B,D_G,D_B,pbe,ic,witness_price\n";
}

inline std::string survivor_csv_row(const MarketParams& p, const EquilibriumCertificate& c) {
    std::ostringstream os;
    os << "1," << fmt(p.price(c.price_good)) << ',' << fmt(p.price(c.price_bad)) << ','
       << fmt(c.pi_good) << ',' << fmt(c.pi_bad) << ',' << fmt(c.demand_good) << ','
       << fmt(c.demand_bad) << ",1,1,-\n";
    return os.str();
}

inline std::string verify_csv_row(const MarketParams& p, const EquilibriumCertificate& c) {
    std::ostringstream os;
    os << "1," << fmt(p.price(c.price_good)) << ',' << fmt(p.price(c.price_bad)) << ','
       << fmt(c.pi_good) << ',' << fmt(c.pi_bad) << ',' << fmt(c.demand_good) << ','
       << fmt(c.demand_bad) << ',';
    os << (c.pbe_pass ? "1," : "0,");
    if (!c.pbe_pass)
        os << "-,";
    else
        os << (c.ic_pass ? "1," : "0,");
    if (!c.pbe_pass && c.pbe_witness >= 0)
        os << fmt(p.price(c.pbe_witness));
    else if (c.pbe_pass && !c.ic_pass && c.ic_witness >= 0)
        os << fmt(p.price(c.ic_witness));
    else
        os << '-';
    os << '\n';
    return os.str();
}

inline std::string observable_csv_row(const MarketParams& p, const ObservableCertificate& c) {
    std::ostringstream os;
    os << "1," << fmt(p.price(c.price_good)) << ',' << fmt(p.price(c.price_bad)) << ','
       << fmt(c.pi_good) << ',' << fmt(c.pi_bad) << ',' << fmt(c.demand_good) << ','
       << fmt(c.demand_bad) << ",1,-,-\n";
    return os.str();
}

inline std::string diamond_csv_row(const MarketParams& p, const DiamondCertificate& c,
                                   bool good_type) {
    std::ostringstream os;
    std::string price = fmt(p.price(c.price_index));
    std::string pi = fmt(c.profit_value);
    std::string dem = fmt(c.demand_value);
    if (good_type)
        os << "1," << price << ",-," << pi << ",-," << dem << ",-,1,-,-\n";
    else
        os << "1,-," << price << ",-," << pi << ",-," << dem << ",1,-,-\n";
    return os.str();
}

inline std::string report_header(const RunConfig& cfg, int workers) {
    const MarketParams& p = cfg.market;
    std::ostringstream os;
    os << "price signalling solver " << tool_version() << "\n";
    os << "config hash: " << config_hash(cfg) << "\n";
    os << "command: " << cfg.command;
    if (!cfg.variant.empty()) os << " (" << cfg.variant << ")";
    os << "\n";
    os << "workers: " << workers << "\n\n";
    os << "parameters\n";
    os << "  mu0 = " << fmt(p.mu0) << "\n";
    os << "  m = " << fmt(p.unit) << "\n";
    os << "  k = " << p.k << "  (c_B = " << fmt(p.bad_cost()) << ")\n";
    os << "  n = " << p.n << "  (top price = " << fmt(p.top_price()) << ")\n";
    os << "  c_learn = " << fmt(p.learn_cost) << "\n";
    os << "  valuation = " << p.valuation.describe() << "\n";
    os << "  quality: h(v) = " << fmt(p.quality.intercept()) << " + " << fmt(p.quality.slope())
       << "*v\n";
    os << "  tolerances: cmp=" << fmt(p.tol.cmp) << " root=" << fmt(p.tol.root)
       << " integral=" << fmt(p.tol.integral) << "\n\n";
    return os.str();
}

inline std::string validation_section(const ValidationReport& rep,
                                      const std::set<std::string>& waived) {
    std::ostringstream os;
    os << "validation\n";
    for (const auto& c : rep.checks) {
        const char* tag = c.pass ? "[ ok ]" : (waived.count(c.name) ? "[fail, waived]" : "[FAIL]");
        os << "  " << tag << ' ' << c.name << ": value=" << fmt(c.lhs) << " bound=" << fmt(c.rhs)
           << "  (" << c.note << ")\n";
    }
    const ValidationCheck* ms = rep.find("unit_below_m_star");
    if (ms != nullptr && ms->note != "m < m*")
        os << "  m_star = (" << ms->note << ")\n";
    else
        os << "  m_star = " << fmt(rep.m_star_value) << "\n";
    os << "  P_G_m = " << fmt(rep.monopoly_price_good) << "\n\n";
    return os.str();
}

inline nlohmann::json params_payload(const RunConfig& cfg, const ValidationReport& rep) {
    nlohmann::json j;
    j["tool_version"] = tool_version();
    j["config"] = canonical_config(cfg);
    j["config_hash"] = config_hash(cfg);
    nlohmann::json d;
    d["bad_cost"] = cfg.market.bad_cost();
    d["bad_cost_plus"] = cfg.market.bad_cost_plus();
    d["top_price"] = cfg.market.top_price();
    d["v_max"] = cfg.market.v_max();
    const ValidationCheck* ms = rep.find("unit_below_m_star");
    if (ms != nullptr && ms->note != "m < m*") {
        d["m_star"] = nullptr;
        d["m_star_note"] = ms->note;
    } else {
        d["m_star"] = rep.m_star_value;
    }
    d["P_G_m"] = rep.monopoly_price_good;
    j["derived"] = d;
    return j;
}

inline void write_params_json(const std::filesystem::path& dir, const RunConfig& cfg,
                              const ValidationReport& rep) {
    write_text(dir / "params.json", params_payload(cfg, rep).dump(2) + "\n");
}

inline std::string timing_section(double seconds) {
    return "timing\n  total = " + format_number(seconds, 3) + " s\n";
}

// Search report body plus the survivors-only CSV shared by solve and the
// low-monopoly variant.
inline std::pair<std::string, std::string> search_artifacts(const MarketParams& p,
                                                            const SearchResult& r) {
    std::string csv = csv_header();
    std::ostringstream body;
    body << "search\n";
    body << "  candidates = " << r.n_candidates << "\n";
    body << "  pbe = " << r.n_pbe << "\n";
    body << "  ic_survivors = " << r.n_ic << "\n";
    body << "  belief_fallback = " << (r.belief_fallback ? "yes" : "no") << "\n\n";
    body << "survivors\n";
    bool any = false;
    for (const auto& c : r.certificates) {
        if (!c.ic_pass) continue;
        any = true;
        csv += survivor_csv_row(p, c);
        body << "  P_G=" << fmt(p.price(c.price_good)) << " P_B=" << fmt(p.price(c.price_bad))
             << " pi_G=" << fmt(c.pi_good) << " pi_B=" << fmt(c.pi_bad)
             << " D_G=" << fmt(c.demand_good) << " D_B=" << fmt(c.demand_bad) << "\n";
    }
    if (!any) body << "  (none)\n";
    body << "\n";
    return {csv, body.str()};
}

// Headline prices for a sweep row: the survivor whose bad type earns a
// positive margin if one exists, otherwise the first survivor.
inline const EquilibriumCertificate* headline_survivor(const MarketParams& p,
                                                       const SearchResult& r) {
    const EquilibriumCertificate* first = nullptr;
    for (const auto& c : r.certificates) {
        if (!c.ic_pass) continue;
        if (first == nullptr) first = &c;
        if (c.pi_bad > p.tol.cmp) return &c;
    }
    return first;
}

inline HarnessResult run_solve(const RunConfig& cfg, int workers,
                               const std::filesystem::path& out) {
    auto t0 = std::chrono::steady_clock::now();
    ValidationReport rep = validate(cfg.market);
    write_params_json(out, cfg, rep);
    if (!rep.all_pass()) {
        std::string report = report_header(cfg, workers) + validation_section(rep, {}) +
                             "result: validation failed (" + rep.first_failure() + ")\n";
        write_text(out / "report.txt", report);
        return {2, "validation failed: " + rep.first_failure()};
    }
    SearchResult r = find_equilibria(cfg.market, SearchOptions{workers, false});
    auto [csv, body] = search_artifacts(cfg.market, r);
    write_text(out / "equilibria.csv", csv);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(out / "report.txt", report_header(cfg, workers) + validation_section(rep, {}) +
                                       body + timing_section(secs));
    return {0, "solve done: " + std::to_string(r.n_ic) + " surviving equilibria"};
}

inline HarnessResult run_verify(const RunConfig& cfg, const std::filesystem::path& out) {
    auto t0 = std::chrono::steady_clock::now();
    const MarketParams& p = cfg.market;
    Profile prof = make_profile(p, cfg.profile);  // ConfigError on malformed specs
    ValidationReport rep = validate(p);
    write_params_json(out, cfg, rep);
    if (!rep.all_pass()) {
        std::string report = report_header(cfg, 1) + validation_section(rep, {}) +
                             "result: validation failed (" + rep.first_failure() + ")\n";
        write_text(out / "report.txt", report);
        return {2, "validation failed: " + rep.first_failure()};
    }
    EquilibriumCertificate cert = verify_pbe(p, prof);
    if (cert.pbe_pass) cert = intuitive_criterion(p, cert);

    write_text(out / "equilibria.csv", std::string(csv_header()) + verify_csv_row(p, cert));

    std::ostringstream body;
    body << "verification\n";
    body << "  P_G = " << fmt(p.price(cert.price_good)) << "  P_B = "
         << fmt(p.price(cert.price_bad)) << "\n";
    body << "  pi_G = " << fmt(cert.pi_good) << "  pi_B = " << fmt(cert.pi_bad) << "\n";
    body << "  gap_good = " << fmt(cert.gap_good) << "  gap_bad = " << fmt(cert.gap_bad) << "\n";
    body << "  pbe = " << (cert.pbe_pass ? "pass" : "FAIL") << "\n";
    if (!cert.pbe_pass && cert.pbe_witness >= 0)
        body << "  witness_price = " << fmt(p.price(cert.pbe_witness)) << " ("
             << (cert.pbe_witness_is_good ? "good" : "bad") << " type gains)\n";
    if (cert.pbe_pass) {
        body << "  ic = " << (cert.ic_pass ? "pass" : "FAIL") << "\n";
        if (!cert.ic_pass && cert.ic_witness >= 0)
            body << "  witness_price = " << fmt(p.price(cert.ic_witness))
                 << " (gain = " << fmt(cert.ic_gain) << ")\n";
    }
    body << "\n";
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(out / "report.txt",
               report_header(cfg, 1) + validation_section(rep, {}) + body.str() +
                   timing_section(secs));
    std::string verdict = !cert.pbe_pass ? "not a pbe" : (cert.ic_pass ? "pbe, survives" : "pbe, refined away");
    return {0, "verify done: " + verdict};
}

inline HarnessResult run_variant(const RunConfig& cfg, int workers,
                                 const std::filesystem::path& out) {
    auto t0 = std::chrono::steady_clock::now();
    const MarketParams& p = cfg.market;
    std::set<std::string> waived;
    if (cfg.variant == "low-monopoly")
        waived = {"monopoly_profit_increasing"};
    else
        waived = {"unit_below_m_star"};

    ValidationReport rep = validate(p);
    write_params_json(out, cfg, rep);
    if (!rep.pass_except(waived)) {
        std::string first;
        for (const auto& c : rep.checks)
            if (!c.pass && !waived.count(c.name)) {
                first = c.name;
                break;
            }
        std::string report = report_header(cfg, workers) + validation_section(rep, waived) +
                             "result: validation failed (" + first + ")\n";
        write_text(out / "report.txt", report);
        return {2, "validation failed: " + first};
    }

    std::string csv = csv_header();
    std::ostringstream body;
    if (cfg.variant == "observable") {
        ObservableResult r = observable_equilibria(p, SearchOptions{workers, false});
        body << "observable search\n";
        body << "  candidates = " << r.n_candidates << "\n";
        body << "  equilibria = " << r.n_pbe << "\n";
        body << "  good price floor = " << fmt(observable_good_floor(p)) << "\n\n";
        body << "survivors\n";
        for (const auto& c : r.certificates) {
            csv += observable_csv_row(p, c);
            body << "  P_G=" << fmt(p.price(c.price_good)) << " P_B=" << fmt(p.price(c.price_bad))
                 << " pi_G=" << fmt(c.pi_good) << " pi_B=" << fmt(c.pi_bad) << "\n";
        }
        if (r.certificates.empty()) body << "  (none)\n";
        body << "\n";
    } else if (cfg.variant == "diamond-good" || cfg.variant == "diamond-bad") {
        bool good_type = cfg.variant == "diamond-good";
        DiamondResult r = diamond_baseline(p, good_type);
        body << "single-type baseline (" << (good_type ? "good" : "bad") << ")\n";
        body << "  candidates = " << r.n_candidates << "\n";
        body << "  equilibria = " << r.n_pbe << "\n\n";
        body << "survivors\n";
        for (const auto& c : r.certificates) {
            csv += diamond_csv_row(p, c, good_type);
            body << "  price=" << fmt(p.price(c.price_index)) << " pi=" << fmt(c.profit_value)
                 << " demand=" << fmt(c.demand_value) << "\n";
        }
        if (r.certificates.empty()) body << "  (none)\n";
        body << "\n";
    } else {  // low-monopoly
        SearchResult r = low_monopoly_variant(p, SearchOptions{workers, false});
        auto [scsv, sbody] = search_artifacts(p, r);
        csv = scsv;
        body << "low-monopoly search\n";
        body << "  predicted P_G = " << fmt(p.price(low_monopoly_good_price(p))) << "\n";
        body << "  predicted P_B = " << fmt(p.price(low_monopoly_bad_price(p))) << "\n\n";
        body << sbody;
    }
    write_text(out / "equilibria.csv", csv);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(out / "report.txt", report_header(cfg, workers) + validation_section(rep, waived) +
                                       body.str() + timing_section(secs));
    return {0, "variant " + cfg.variant + " done"};
}

inline MarketParams sweep_market(const MarketParams& base, const std::string& parameter,
                                 double value) {
    MarketParams q = base;
    if (parameter == "mu0") {
        q.mu0 = value;
    } else if (parameter == "c_learn") {
        q.learn_cost = value;
    } else if (parameter == "m") {
        if (!(value > 0.0)) throw ConfigError("sweep over m needs positive values");
        q.unit = value;
        q.k = static_cast<int>(std::lround(base.bad_cost() / value));
        q.n = static_cast<int>(std::lround(base.top_price() / value));
    } else {  // k
        q.k = static_cast<int>(std::lround(value));
    }
    return q;
}

inline HarnessResult run_sweep(const RunConfig& cfg, int workers,
                               const std::filesystem::path& out) {
    auto t0 = std::chrono::steady_clock::now();
    std::string summary = "value,n_pbe,n_ic,P_G,P_B,skipped_check\n";
    std::ostringstream body;
    body << "sweep\n  parameter = " << cfg.sweep.parameter << "\n";

    for (double value : cfg.sweep.values) {
        RunConfig sub = cfg;
        sub.command = "solve";
        sub.sweep = SweepSpec{};
        sub.market = sweep_market(cfg.market, cfg.sweep.parameter, value);
        std::filesystem::path dir = out / (cfg.sweep.parameter + "=" + fmt(value));
        std::filesystem::create_directories(dir);

        ValidationReport rep = validate(sub.market);
        write_params_json(dir, sub, rep);
        if (!rep.all_pass()) {
            write_text(dir / "report.txt", report_header(sub, workers) +
                                               validation_section(rep, {}) +
                                               "result: validation failed (" +
                                               rep.first_failure() + ")\n");
            summary += fmt(value) + ",-,-,-,-," + rep.first_failure() + "\n";
            body << "  " << cfg.sweep.parameter << "=" << fmt(value) << ": skipped ("
                 << rep.first_failure() << ")\n";
            continue;
        }
        SearchResult r = find_equilibria(sub.market, SearchOptions{workers, false});
        auto [csv, sbody] = search_artifacts(sub.market, r);
        write_text(dir / "equilibria.csv", csv);
        write_text(dir / "report.txt",
                   report_header(sub, workers) + validation_section(rep, {}) + sbody);
        const EquilibriumCertificate* head = headline_survivor(sub.market, r);
        std::string pg = head != nullptr ? fmt(sub.market.price(head->price_good)) : "-";
        std::string pb = head != nullptr ? fmt(sub.market.price(head->price_bad)) : "-";
        summary += fmt(value) + "," + std::to_string(r.n_pbe) + "," + std::to_string(r.n_ic) +
                   "," + pg + "," + pb + ",-\n";
        body << "  " << cfg.sweep.parameter << "=" << fmt(value) << ": pbe=" << r.n_pbe
             << " ic=" << r.n_ic << " P_G=" << pg << " P_B=" << pb << "\n";
    }
    body << "\n";
    write_text(out / "summary.csv", summary);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(out / "report.txt", report_header(cfg, workers) + body.str() +
                                       timing_section(secs));
    return {0, "sweep done: " + std::to_string(cfg.sweep.values.size()) + " values"};
}

}  // namespace detail

inline HarnessResult run_config(const RunConfig& cfg) {
    int workers = cfg.workers > 0 ? cfg.workers : 1;
    std::filesystem::path out(cfg.output_dir);
    std::filesystem::create_directories(out);
    if (cfg.command == "solve") return detail::run_solve(cfg, workers, out);
    if (cfg.command == "verify") return detail::run_verify(cfg, out);
    if (cfg.command == "sweep") return detail::run_sweep(cfg, workers, out);
    return detail::run_variant(cfg, workers, out);
}

}  // namespace pricesig

#endif
