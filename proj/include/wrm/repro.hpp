#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wrm {

struct ReproOptions {
    long long realisations = 0;  // 0 = recipe default
    std::uint64_t seed = 12345;
    int threads = 1;
    std::string out_dir;  // empty = compute checks only, write nothing
};

struct ReproCheck {
    std::string name;
    bool pass;
    std::string detail;
};

struct ReproResult {
    std::string figure;
    bool pass = true;
    std::vector<ReproCheck> checks;
    std::vector<std::string> outputs;

    void add(const std::string& name, bool ok, const std::string& detail);
};

// Canned experiment recipes with built-in comparisons against theory.
ReproResult reproduce_fig1a(const ReproOptions& opt = {});  // variance/correlation vs ODE
ReproResult reproduce_fig1b(const ReproOptions& opt = {});  // large-N ODE plateau
ReproResult reproduce_fig2(const ReproOptions& opt = {});   // ensemble-average wealth law
ReproResult reproduce_fig3(const ReproOptions& opt = {});   // correlation cascade on a ring

ReproResult reproduce_figure(const std::string& figure, const ReproOptions& opt = {});
std::vector<std::string> reproduce_figure_names();

}  // namespace wrm
