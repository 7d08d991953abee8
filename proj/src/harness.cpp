#include "goalcycle/harness.hpp"

#include "goalcycle/train.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace goalcycle::harness {

// Probe suites ---------------------------------------------------------------

std::vector<env::TaskSpec> probe_suite(const std::string& name) {
    struct Kind {
        env::WorldParams world;
        std::vector<int> goal_counts;
        int tasks;
    };
    Kind k;
    std::uint64_t tag = 0;
    if (name == "empty4") {
        k = {{}, {4}, 8};
        tag = 1;
    } else if (name == "empty5") {
        k = {{}, {5}, 8};
        tag = 2;
    } else if (name == "complex") {
        tag = 3;
        k.world.world_size = 24.0;
        k.world.v_obstacle_density = 0.02;
        k.world.h_obstacle_density = 0.005;
        k.goal_counts = {4, 5};
        k.tasks = 8;
    } else {
        throw ConfigError("unknown probe suite '" + name + "' (empty4, empty5, complex)");
    }
    constexpr std::uint64_t kTopBit = std::uint64_t{1} << 63;
    Rng rng = make_rng(0x5EED0000 + static_cast<std::uint64_t>(kProbeSuiteVersion), tag);
    std::vector<env::TaskSpec> out;
    for (int i = 0; i < k.tasks; ++i) {
        env::WorldParams w = k.world;
        w.num_goals = k.goal_counts[static_cast<std::size_t>(i) % k.goal_counts.size()];
        const auto& classes = game::achievable_crossings(w.num_goals);
        const int target = classes[static_cast<std::size_t>(i / static_cast<int>(k.goal_counts.size())) % classes.size()];
        w.seed = rng() | kTopBit;
        env::TaskSpec t;
        t.world = w;
        const auto s = game::sample_game_uniform_topology([&](Rng& r) { return env::place_goals(w, r); }, w.num_goals, rng,
                                                          10000, target);
        t.goal_centres = s.positions;
        t.order = s.game.order;
        t.dropout = expert::DropoutScheme::half();
        t.episode_length = 1800;
        t.episode_seed = rng() | kTopBit;
        out.push_back(std::move(t));
    }
    return out;
}

// Agents -----------------------------------------------------------------------

env::PolicyFactory make_agent(const ExperimentConfig& cfg) {
    if (cfg.agent == "random") return ct::factory_of<ct::RandomPolicy>();
    if (cfg.agent == "follower") return ct::factory_of<ct::FollowerPolicy>();
    if (cfg.agent == "replay") return ct::factory_of<ct::ReplayPolicy>();
    if (cfg.agent == "anti") return ct::factory_of<ct::AntiFollowerPolicy>();
    if (cfg.agent == "random-entry") return ct::factory_of<ct::RandomEntryPolicy>();
    if (cfg.agent == "checkpoint") {
        auto ck = train::load_checkpoint(cfg.checkpoint);
        auto params = std::make_shared<const agent::Params<float>>(std::move(ck.params));
        return agent::agent_factory(params, cfg.train.eval_greedy);
    }
    throw ConfigError("unknown agent '" + cfg.agent + "'");
}

// CSV ------------------------------------------------------------------------------

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw ContractViolation("csv: row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        const auto& c = cells[i];
        if (c.find_first_of(",\"\n") != std::string::npos) {
            out_ << '"';
            for (char ch : c) out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
            out_ << '"';
        } else {
            out_ << c;
        }
    }
    out_ << '\n';
    out_.flush();
}

std::string CsvWriter::cell(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<std::string> metrics_header() {
    return {"step", "updates", "episodes", "agent_score", "expert_score", "policy_loss", "value_loss", "entropy",
            "attention_loss", "grad_norm"};
}

void write_metrics_row(CsvWriter& csv, const train::MetricsRow& r) {
    csv.values(r.step, r.updates, r.episodes, r.agent_score, r.expert_score, r.policy_loss, r.value_loss, r.entropy,
               r.attention_loss, r.grad_norm);
}

std::vector<std::string> eval_header() { return {"step", "ct", "E", "A_full", "A_solo", "A_half"}; }

void write_eval_row(CsvWriter& csv, const train::EvalPoint& p) { csv.values(p.step, p.ct, p.E, p.A_full, p.A_solo, p.A_half); }

Table read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("csv: cannot read " + path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char ch = line[i];
            if (quoted) {
                if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (ch == '"') {
                    quoted = false;
                } else {
                    cur += ch;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cells.push_back(cur);
        if (first) {
            t.header = cells;
            first = false;
        } else {
            if (cells.size() != t.header.size()) throw IoError("csv: ragged row in " + path);
            t.rows.push_back(cells);
        }
    }
    if (first) throw IoError("csv: empty file " + path);
    return t;
}

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

// SVG ------------------------------------------------------------------------------

namespace {

const char* kGoalColours[] = {"#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45"};
const char* kPlayerColours[] = {"#222222", "#d4a017", "#1f77b4", "#2ca02c"};

std::string num(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string trajectory_svg(const env::World& world, const std::vector<std::vector<env::Pose>>& paths,
                           const std::vector<env::GoalEntry>& entries, const std::vector<int>& entry_steps,
                           const std::string& title) {
    const double px = 600.0, scale = px / world.size, top = title.empty() ? 0.0 : 24.0;
    auto X = [&](double x) { return num(x * scale); };
    auto Y = [&](double y) { return num(top + (world.size - y) * scale); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px + top << "\">\n";
    if (!title.empty()) os << "<text x=\"6\" y=\"17\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";
    os << "<rect x=\"0\" y=\"" << top << "\" width=\"" << px << "\" height=\"" << px << "\" fill=\"#f7f7f2\" stroke=\"#888\"/>\n";
    for (const auto& z : world.slow_zones) {
        os << "<rect x=\"" << num(-z.half_length * scale) << "\" y=\"" << num(-z.half_width * scale) << "\" width=\""
           << num(2 * z.half_length * scale) << "\" height=\"" << num(2 * z.half_width * scale)
           << "\" fill=\"#c8b48c\" fill-opacity=\"0.6\" transform=\"translate(" << X(z.centre.x()) << "," << Y(z.centre.y())
           << ") rotate(" << num(-z.angle * 180.0 / kPi) << ")\"/>\n";
    }
    for (const auto& p : world.pillars) {
        os << "<circle cx=\"" << X(p.centre.x()) << "\" cy=\"" << Y(p.centre.y()) << "\" r=\"" << num(p.radius * scale)
           << "\" fill=\"#555\"/>\n";
    }
    for (const auto& g : world.goals) {
        const char* c = kGoalColours[static_cast<std::size_t>(g.colour) % 8];
        os << "<circle cx=\"" << X(g.centre.x()) << "\" cy=\"" << Y(g.centre.y()) << "\" r=\"" << num(g.radius * scale)
           << "\" fill=\"" << c << "\" fill-opacity=\"0.25\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << X(g.centre.x()) << "\" y=\"" << Y(g.centre.y())
           << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << g.colour << "</text>\n";
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (paths[i].empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << kPlayerColours[i % 4] << "\" stroke-width=\"1.5\" stroke-opacity=\"0.8\" points=\"";
        for (const auto& p : paths[i]) os << X(p.position.x()) << "," << Y(p.position.y()) << " ";
        os << "\"/>\n";
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        const auto pi = static_cast<std::size_t>(e.player);
        const int step = k < entry_steps.size() ? entry_steps[k] : -1;
        if (pi >= paths.size() || step < 0 || static_cast<std::size_t>(step) >= paths[pi].size()) continue;
        const auto& p = paths[pi][static_cast<std::size_t>(step)];
        const char* fill = e.reward > 0 ? "#2a2" : (e.reward < 0 ? "#d22" : "#999");
        os << "<circle cx=\"" << X(p.position.x()) << "\" cy=\"" << Y(p.position.y()) << "\" r=\"3\" fill=\"" << fill
           << "\"><title>player " << e.player << " t=" << step << " goal " << e.goal << " reward " << e.reward
           << "</title></circle>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string trajectory_svg(const Trajectory& traj) {
    const env::World world = env::build_world(traj.task);
    std::vector<std::vector<env::Pose>> paths(traj.players.size());
    std::vector<env::GoalEntry> entries;
    std::vector<int> steps;
    for (const auto& s : traj.steps) {
        for (std::size_t i = 0; i < paths.size(); ++i) paths[i].push_back(s.poses[i]);
        for (const auto& e : s.entries) {
            entries.push_back(e);
            steps.push_back(s.t);
        }
    }
    std::string title;
    for (std::size_t i = 0; i < traj.players.size(); ++i) {
        title += (i ? ", " : "") + traj.players[i].policy + " " +
                 std::to_string(i < traj.final_scores.size() ? traj.final_scores[i] : 0);
    }
    return trajectory_svg(world, paths, entries, steps, title);
}

std::string trajectory_svg(const env::TaskSpec& task, const analysis::TrajectoryComparison& tc) {
    const env::World world = env::build_world(task);
    std::vector<std::vector<env::Pose>> paths = {tc.agent};
    if (!tc.expert.empty()) paths.push_back(tc.expert);
    std::string title = analysis::to_string(tc.script) + ": agent " + std::to_string(tc.scores.empty() ? 0 : tc.scores[0]);
    if (tc.scores.size() > 1) title += ", expert " + std::to_string(tc.scores[1]);
    return trajectory_svg(world, paths, tc.entries, tc.entry_steps, title);
}

std::string line_chart_svg(const std::vector<Series>& series, const std::string& x_label, const std::string& y_label,
                           const std::string& title) {
    const double W = 640, H = 400, L = 60, R = 20, T = 30, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto X = [&](double v) { return num(L + (v - x0) / (x1 - x0) * (W - L - R)); };
    auto Y = [&](double v) { return num(H - B - (v - y0) / (y1 - y0) * (H - T - B)); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) os << "<text x=\"" << L << "\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
        os << "<text x=\"" << X(xv) << "\" y=\"" << H - B + 16 << "\" font-size=\"10\" text-anchor=\"middle\">" << xv << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << Y(yv) << "\" font-size=\"10\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(x_label)
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << (T + H - B) / 2 << ")\">" << escape(y_label) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* c = kGoalColours[i % 8];
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) os << X(s.x[k]) << "," << Y(s.y[k]) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (i + 1) << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << c
           << "\">" << escape(s.name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace goalcycle::harness
