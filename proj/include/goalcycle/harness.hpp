// Probe-task suites, agent lookup by name, metrics files and SVG plots.
#pragma once

#include "goalcycle/analysis.hpp"
#include "goalcycle/config.hpp"
#include "goalcycle/trajectory.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace goalcycle::harness {

/// Fixed task lists (version 1): "empty4" flat empty 4-goal worlds, "empty5" the same with 5 goals,
/// "complex" obstacle worlds with 4 and 5 goals. Layout seeds have the top bit set, so they never
/// coincide with training or evaluation layouts. Crossing classes cycle through the achievable ones.
std::vector<env::TaskSpec> probe_suite(const std::string& name);
inline constexpr int kProbeSuiteVersion = 1;

/// Stub agents by name, or a trained agent from cfg.checkpoint. Throws ConfigError or IoError.
env::PolicyFactory make_agent(const ExperimentConfig& cfg);

/// Comma-separated rows with a fixed header.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> header);
    void row(const std::vector<std::string>& cells);
    template <typename... T>
    void values(const T&... v) {
        row({cell(v)...});
    }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double v);
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    std::ostream& out_;
    std::size_t columns_;
};

std::vector<std::string> metrics_header();
void write_metrics_row(CsvWriter& csv, const train::MetricsRow& r);
std::vector<std::string> eval_header();
void write_eval_row(CsvWriter& csv, const train::EvalPoint& p);

/// Top-down view of a world with one polyline per player and goal-entry markers.
std::string trajectory_svg(const env::World& world, const std::vector<std::vector<env::Pose>>& paths,
                           const std::vector<env::GoalEntry>& entries, const std::vector<int>& entry_steps,
                           const std::string& title = {});
std::string trajectory_svg(const Trajectory& traj);
std::string trajectory_svg(const env::TaskSpec& task, const analysis::TrajectoryComparison& tc);

struct Series {
    std::string name;
    std::vector<double> x, y;
};

/// Line chart of one or more series.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& x_label, const std::string& y_label,
                           const std::string& title = {});

/// Reads a CSV produced by CsvWriter: header plus rows. Throws IoError.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int column(const std::string& name) const;  // -1 when absent
};
Table read_csv(const std::string& path);

}  // namespace goalcycle::harness
