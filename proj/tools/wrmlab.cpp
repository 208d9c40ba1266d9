// wrmlab: simulate and analyse the multiplicative wealth-exchange model.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wrm/csv.hpp"
#include "wrm/errors.hpp"
#include "wrm/meanfield.hpp"
#include "wrm/moments.hpp"
#include "wrm/network.hpp"
#include "wrm/regimes.hpp"
#include "wrm/repro.hpp"
#include "wrm/sde.hpp"
#include "wrm/stats.hpp"
#include "wrm/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw wrm::ConfigError("bad " + what + " '" + s + "'");
    }
}

int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw wrm::ConfigError("bad " + what + " '" + s + "'");
    }
}

wrm::ExchangeNetwork parse_network(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw wrm::ConfigError("bad network '" + spec +
                               "' (expected complete:N, ring:N, star:N or file:PATH)");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    if (kind == "file") {
        std::ifstream in(rest);
        if (!in) throw wrm::ConfigError("cannot open network file '" + rest + "'");
        return wrm::ExchangeNetwork::load_edge_list(in);
    }
    const int n = parse_int(rest, "network size");
    if (kind == "complete") return wrm::ExchangeNetwork::complete(n);
    if (kind == "ring") return wrm::ExchangeNetwork::ring(n);
    if (kind == "star") return wrm::ExchangeNetwork::star(n);
    throw wrm::ConfigError("unknown network kind '" + kind + "'");
}

std::vector<double> parse_samples(const std::string& spec, double horizon) {
    if (spec.empty()) {
        const double lo = std::min(0.01, horizon / 10.0);
        return wrm::geometric_times(lo, horizon, 25);
    }
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() == 4 && parts[0] == "geometric")
        return wrm::geometric_times(parse_double(parts[1], "sample time"),
                                    parse_double(parts[2], "sample time"),
                                    parse_int(parts[3], "sample count"));
    if (parts.size() == 2 && parts[0] == "list") {
        std::vector<double> times;
        std::stringstream ls(parts[1]);
        while (std::getline(ls, item, ',')) times.push_back(parse_double(item, "sample time"));
        if (times.empty()) throw wrm::ConfigError("empty sample list");
        if (!std::is_sorted(times.begin(), times.end()))
            throw wrm::ConfigError("sample list must be sorted");
        return times;
    }
    throw wrm::ConfigError("bad sample spec '" + spec +
                           "' (expected geometric:LO:HI:K or list:T1,T2,...)");
}

void apply_init(const std::string& spec, wrm::SimConfig& cfg) {
    if (spec == "one") {
        cfg.init = wrm::InitKind::one;
    } else if (spec == "stationary") {
        cfg.init = wrm::InitKind::stationary;
    } else if (spec.rfind("file:", 0) == 0) {
        const std::string path = spec.substr(5);
        std::ifstream in(path);
        if (!in) throw wrm::ConfigError("cannot open initial wealth file '" + path + "'");
        cfg.init = wrm::InitKind::values;
        cfg.init_values.clear();
        double v;
        while (in >> v) cfg.init_values.push_back(v);
    } else {
        throw wrm::ConfigError("bad init '" + spec + "' (expected one, stationary or file:PATH)");
    }
}

wrm::NegPolicy parse_neg_policy(const std::string& spec) {
    if (spec == "reject") return wrm::NegPolicy::reject;
    if (spec == "abort") return wrm::NegPolicy::abort_run;
    if (spec == "clamp") return wrm::NegPolicy::clamp;
    throw wrm::ConfigError("bad neg-policy '" + spec + "' (expected reject, abort or clamp)");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw wrm::ConfigError("cannot open output file " + path.string());
    return out;
}

void write_manifest(const std::string& dir, const std::string& command, const json& params,
                    const std::vector<std::string>& outputs) {
    json j;
    j["tool"] = "wrmlab";
    j["version"] = wrm::kVersion;
    j["command"] = command;
    j["parameters"] = params;
    j["outputs"] = outputs;
    auto out = open_out(fs::path(dir) / "manifest.json");
    out << j.dump(2) << '\n';
}

struct CommonSimFlags {
    std::string net = "complete:10";
    double sigma2 = -1.0;
    double dt = 1e-3;
    double horizon = 20.0;
    long long realisations = 10000;
    std::uint64_t seed = 12345;
    double tax = 0.0;
    std::string init = "one";
    std::string neg_policy = "reject";
    std::string sample;
    std::string out;
    int threads = 1;
};

void check_sigma2(double sigma2) {
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
        throw wrm::ConfigError("sigma2 must be finite and non-negative");
}

int run_net(const std::string& net_spec, const std::string& out_dir) {
    const auto net = parse_network(net_spec);
    if (out_dir.empty()) {
        std::cout << "# " << net.descriptor() << " z=" << wrm::format_double(net.avg_degree())
                  << '\n';
        net.to_edge_list(std::cout);
        return 0;
    }
    fs::create_directories(out_dir);
    const fs::path path = fs::path(out_dir) / "edges.txt";
    {
        auto out = open_out(path);
        out << "# " << net.descriptor() << " z=" << wrm::format_double(net.avg_degree())
            << '\n';
        net.to_edge_list(out);
    }
    json params;
    params["net"] = net.descriptor();
    params["n"] = net.n_agents();
    params["avg_degree"] = net.avg_degree();
    params["connected"] = net.is_connected();
    write_manifest(out_dir, "net", params, {"edges.txt"});
    return 0;
}

int run_simulate(const CommonSimFlags& f) {
    check_sigma2(f.sigma2);
    const auto net = parse_network(f.net);
    wrm::SimConfig cfg;
    cfg.sigma = std::sqrt(f.sigma2);
    cfg.dt = f.dt;
    cfg.horizon = f.horizon;
    cfg.realisations = f.realisations;
    cfg.master_seed = f.seed;
    cfg.tax_rate = f.tax;
    cfg.sample_times = parse_samples(f.sample, f.horizon);
    apply_init(f.init, cfg);
    cfg.neg_policy = parse_neg_policy(f.neg_policy);

    wrm::RunOptions run;
    run.threads = f.threads;
    if (net.n_agents() > wrm::ExchangeNetwork::kMaxDense) {
        run.accumulator.pairs = wrm::PairTracking::none;  // no all-pairs distances
        run.accumulator.track_rank_pair = false;
    }
    const auto acc = wrm::run_ensemble(cfg, net, run);

    fs::create_directories(f.out);
    const auto& classes = acc.distance_classes();
    {
        auto out = open_out(fs::path(f.out) / "simulate.csv");
        wrm::CsvWriter csv(out);
        csv.comment("ensemble statistics, " + net.descriptor());
        csv.comment("sigma2=" + wrm::format_double(f.sigma2) + " dt=" +
                    wrm::format_double(cfg.dt) + " tax=" + wrm::format_double(cfg.tax_rate));
        csv.comment("realisations=" + std::to_string(cfg.realisations) + " seed=" +
                    std::to_string(cfg.master_seed));
        std::vector<std::string> cols = {"t", "var_mean", "var_stderr"};
        for (int d : classes) {
            cols.push_back("corr_d" + std::to_string(d));
            cols.push_back("corr_d" + std::to_string(d) + "_stderr");
        }
        cols.insert(cols.end(), {"mad", "kendall", "spearman", "va_mean", "va_stderr",
                                 "va_median"});
        csv.columns(cols);
        const double nan = std::nan("");
        for (std::size_t ti = 0; ti < cfg.sample_times.size(); ++ti) {
            const int i = static_cast<int>(ti);
            std::vector<double> row = {cfg.sample_times[ti],
                                       acc.variance_mean(i).value_or(nan),
                                       acc.variance_mean_stderr(i)};
            for (int d : classes) {
                row.push_back(acc.pearson_class_mean(i, d).value_or(nan));
                row.push_back(acc.pearson_class_stderr(i, d));
            }
            row.push_back(acc.mad_over_agents(i));
            const auto rank = acc.rank_correlations(i);
            row.push_back(rank.kendall.value_or(nan));
            row.push_back(rank.spearman.value_or(nan));
            row.push_back(acc.va_mean(i).value_or(nan));
            row.push_back(acc.va_mean_stderr(i));
            row.push_back(acc.va_median(i).value_or(nan));
            csv.row(row);
        }
    }
    json params;
    params["net"] = net.descriptor();
    params["sigma2"] = f.sigma2;
    params["dt"] = cfg.dt;
    params["horizon"] = cfg.horizon;
    params["realisations"] = cfg.realisations;
    params["seed"] = cfg.master_seed;
    params["tax"] = cfg.tax_rate;
    params["init"] = f.init;
    params["neg_policy"] = f.neg_policy;
    params["threads"] = f.threads;
    params["sample_times"] = cfg.sample_times;
    params["accepted"] = acc.count();
    params["discarded"] = acc.discarded();
    params["clamp_events"] = acc.clamp_events();
    write_manifest(f.out, "simulate", params, {"simulate.csv"});
    return 0;
}

int run_moments(const std::string& net_spec, double sigma2, double tax, double horizon,
                const std::string& sample, const std::string& out_dir) {
    check_sigma2(sigma2);
    if (!(tax >= 0.0) || !std::isfinite(tax))
        throw wrm::ConfigError("tax must be finite and non-negative");
    const auto net = parse_network(net_spec);
    const double sigma = std::sqrt(sigma2);
    const auto times = parse_samples(sample, horizon);
    fs::create_directories(out_dir);
    const double nan = std::nan("");

    std::vector<std::string> outputs = {"moments.csv"};
    auto out = open_out(fs::path(out_dir) / "moments.csv");
    wrm::CsvWriter csv(out);
    if (net.is_complete()) {
        const int n = net.n_agents();
        csv.comment("moment dynamics, " + net.descriptor());
        csv.comment("sigma2=" + wrm::format_double(sigma2) + " tax=" +
                    wrm::format_double(tax));
        csv.columns({"t", "var", "corr", "t1", "t2", "t3"});
        double t1 = nan, t2 = nan, t3 = nan;
        if (tax == 0.0) {
            if (const auto v = wrm::free_regime_end(sigma)) t1 = *v;
            if (const auto v = wrm::variance_sync_time(sigma, n)) t2 = *v;
            if (const auto v = wrm::correlation_sync_time(sigma, n)) t3 = v->value;
        }
        for (double t : times) {
            const auto s = wrm::solve_complete(sigma, n, t, {1.0, 1.0}, tax);
            csv.row({t, wrm::variance_complete(s), wrm::correlation_complete(s), t1, t2, t3});
        }
    } else {
        if (tax != 0.0)
            throw wrm::ConfigError("tax dynamics are only available on the complete graph");
        csv.comment("moment dynamics, " + net.descriptor());
        csv.comment("sigma2=" + wrm::format_double(sigma2));
        const auto t1 = wrm::free_regime_end_general(sigma);
        csv.comment("t1_general=" + (t1 ? wrm::format_double(*t1) : "nan") + " t2_general=" +
                    wrm::format_double(wrm::sync_time_general(net)));
        const auto states = wrm::integrate_general(net, sigma,
                                                   wrm::initial_moments(net, wrm::InitKind::one),
                                                   times);
        const auto dist = net.shortest_path_lengths();
        int max_d = 0;
        for (const auto& row : dist)
            for (int d : row) max_d = std::max(max_d, d);
        std::vector<std::string> cols = {"t", "var_mean"};
        for (int d = 1; d <= max_d; ++d) cols.push_back("corr_d" + std::to_string(d));
        csv.columns(cols);
        for (const auto& s : states) {
            std::vector<double> row = {s.t, wrm::mean_variance(s)};
            for (int d = 1; d <= max_d; ++d)
                row.push_back(wrm::mean_correlation_at_distance(s, net, d));
            csv.row(row);
        }
    }
    json params;
    params["net"] = net.descriptor();
    params["sigma2"] = sigma2;
    params["tax"] = tax;
    params["horizon"] = horizon;
    params["sample_times"] = times;
    write_manifest(out_dir, "moments", params, outputs);
    return 0;
}

int run_regimes(double sigma2, int n, const std::string& net_spec, double horizon,
                bool analytic, const std::string& init, const std::string& out_dir) {
    check_sigma2(sigma2);
    if (analytic && sigma2 >= 1.0)
        throw wrm::ConfigError("closed-form time scales are undefined for sigma2 >= 1: "
                               "second moments diverge");
    const double sigma = std::sqrt(sigma2);
    const bool stationary_init = init == "stationary";
    if (!stationary_init && init != "one")
        throw wrm::ConfigError("bad init '" + init + "' (expected one or stationary)");

    wrm::RegimeReport report;
    if (!net_spec.empty()) {
        const auto net = parse_network(net_spec);
        report = wrm::classify_timeline(sigma, net, horizon, stationary_init);
    } else {
        report = wrm::classify_timeline(sigma, n, horizon, stationary_init);
    }
    json j = report.to_json();
    if (analytic) {
        const auto ev = wrm::complete_eigenvalues(sigma, report.n);
        j["lambda1"] = ev.lambda1;
        j["lambda2"] = ev.lambda2;
        if (sigma > 0.0)
            j["correlation_limit"] = wrm::correlation_limit_complete(sigma, report.n);
        else
            j["correlation_limit"] = nullptr;
    }
    if (out_dir.empty()) {
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "regimes.json");
        out << j.dump(2) << '\n';
    }
    json params;
    params["sigma2"] = sigma2;
    params["network"] = report.network;
    params["horizon"] = horizon;
    params["analytic"] = analytic;
    params["init"] = init;
    write_manifest(out_dir, "regimes", params, {"regimes.json"});
    return 0;
}

int run_reproduce(const std::string& figure, const std::string& out_dir,
                  long long realisations, std::uint64_t seed, int threads) {
    wrm::ReproOptions opt;
    opt.realisations = realisations;
    opt.seed = seed;
    opt.threads = threads;
    opt.out_dir = out_dir;
    const auto result = wrm::reproduce_figure(figure, opt);
    for (const auto& check : result.checks)
        std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << result.figure << "/"
                  << check.name << ": " << check.detail << '\n';
    if (!out_dir.empty()) {
        json params;
        params["figure"] = figure;
        params["realisations"] = realisations;
        params["seed"] = seed;
        params["threads"] = threads;
        json checks = json::array();
        for (const auto& check : result.checks)
            checks.push_back({{"name", check.name}, {"pass", check.pass},
                              {"detail", check.detail}});
        params["checks"] = checks;
        std::vector<std::string> outputs;
        for (const auto& o : result.outputs) outputs.push_back(fs::path(o).filename().string());
        write_manifest(out_dir, "reproduce", params, outputs);
    }
    if (!result.pass) {
        std::cerr << "reproduction checks failed for " << figure << '\n';
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation laboratory for a multiplicative wealth-exchange model"};
    app.set_version_flag("--version", wrm::kVersion);
    app.require_subcommand(1);
    // One app-wide config option; subcommand settings live in INI sections
    // ([simulate], [moments], ...).  Fallthrough lets --config appear after
    // the subcommand name.
    app.set_config("--config", "", "read options from an INI file");
    app.allow_config_extras(CLI::config_extras_mode::error);

    // net
    auto* net_cmd = app.add_subcommand("net", "build or inspect an exchange network");
    net_cmd->fallthrough();
    std::string net_spec;
    std::string net_out;
    net_cmd->add_option("--net", net_spec, "complete:N, ring:N, star:N or file:PATH")
        ->required();
    net_cmd->add_option("--out", net_out, "output directory (default: stdout)");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run a Monte Carlo ensemble");
    sim_cmd->fallthrough();
    CommonSimFlags sim;
    sim_cmd->add_option("--net", sim.net, "network spec");
    sim_cmd->add_option("--sigma2", sim.sigma2, "noise spread sigma^2")->required();
    sim_cmd->add_option("--dt", sim.dt, "time step");
    sim_cmd->add_option("--horizon", sim.horizon, "simulation horizon");
    sim_cmd->add_option("--realisations", sim.realisations, "ensemble size");
    sim_cmd->add_option("--seed", sim.seed, "master seed");
    sim_cmd->add_option("--tax", sim.tax, "redistribution rate");
    sim_cmd->add_option("--init", sim.init, "one, stationary or file:PATH");
    sim_cmd->add_option("--neg-policy", sim.neg_policy, "reject, abort or clamp");
    sim_cmd->add_option("--sample", sim.sample, "geometric:LO:HI:K or list:T1,T2,...");
    sim_cmd->add_option("--out", sim.out, "output directory")->required();
    sim_cmd->add_option("--threads", sim.threads, "worker threads");

    // moments
    auto* mom_cmd = app.add_subcommand("moments", "integrate the moment dynamics");
    mom_cmd->fallthrough();
    std::string mom_net = "complete:10";
    double mom_sigma2 = -1.0, mom_tax = 0.0, mom_horizon = 100.0;
    std::string mom_sample, mom_out;
    mom_cmd->add_option("--net", mom_net, "network spec");
    mom_cmd->add_option("--sigma2", mom_sigma2, "noise spread sigma^2")->required();
    mom_cmd->add_option("--tax", mom_tax, "redistribution rate (complete graph only)");
    mom_cmd->add_option("--horizon", mom_horizon, "largest default sample time");
    mom_cmd->add_option("--sample", mom_sample, "geometric:LO:HI:K or list:T1,T2,...");
    mom_cmd->add_option("--out", mom_out, "output directory")->required();

    // regimes
    auto* reg_cmd = app.add_subcommand("regimes", "report regime time scales");
    reg_cmd->fallthrough();
    double reg_sigma2 = -1.0, reg_horizon = 100.0;
    int reg_n = 0;
    std::string reg_net, reg_init = "one", reg_out;
    bool reg_analytic = false;
    reg_cmd->add_option("--sigma2", reg_sigma2, "noise spread sigma^2")->required();
    auto* reg_n_opt = reg_cmd->add_option("--n", reg_n, "complete-graph size");
    auto* reg_net_opt = reg_cmd->add_option("--net", reg_net, "network spec");
    reg_n_opt->excludes(reg_net_opt);
    reg_cmd->add_option("--horizon", reg_horizon, "timeline horizon");
    reg_cmd->add_flag("--analytic", reg_analytic, "include closed-form spectral data");
    reg_cmd->add_option("--init", reg_init, "one or stationary");
    reg_cmd->add_option("--out", reg_out, "output directory (default: stdout)");

    // reproduce
    auto* rep_cmd = app.add_subcommand("reproduce", "rerun a canned experiment recipe");
    rep_cmd->fallthrough();
    std::string rep_figure, rep_out;
    long long rep_realisations = 0;
    std::uint64_t rep_seed = 12345;
    int rep_threads = 1;
    rep_cmd->add_option("figure", rep_figure, "fig1a, fig1b, fig2 or fig3")->required();
    rep_cmd->add_option("--out", rep_out, "output directory")->required();
    rep_cmd->add_option("--realisations", rep_realisations, "override the recipe ensemble size");
    rep_cmd->add_option("--seed", rep_seed, "master seed");
    rep_cmd->add_option("--threads", rep_threads, "worker threads");

    int rc = 0;
    try {
        app.parse(argc, argv);
        if (*net_cmd) rc = run_net(net_spec, net_out);
        if (*sim_cmd) rc = run_simulate(sim);
        if (*mom_cmd)
            rc = run_moments(mom_net, mom_sigma2, mom_tax, mom_horizon, mom_sample, mom_out);
        if (*reg_cmd) {
            if (reg_net.empty() && reg_n == 0)
                throw wrm::ConfigError("regimes: give either --n or --net");
            rc = run_regimes(reg_sigma2, reg_n, reg_net, reg_horizon, reg_analytic, reg_init,
                             reg_out);
        }
        if (*rep_cmd) rc = run_reproduce(rep_figure, rep_out, rep_realisations, rep_seed,
                                         rep_threads);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const wrm::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const wrm::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return rc;
}
