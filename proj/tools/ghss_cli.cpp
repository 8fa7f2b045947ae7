// Command-line harness: derive parameters, generate streams, run a single
// estimate, or run seeded oracle trials.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ghss/ghss.hpp"
#include "ghss/harness.hpp"
#include "ghss/params.hpp"

namespace {

struct CommonArgs {
    std::uint64_t n = 4096;
    double p = 3.0;
    double eps = 0.2;
    std::uint64_t seed = 1;
    bool paper = false;
    std::string out_format = "json";
};

void add_common(CLI::App* cmd, CommonArgs& args)
{
    cmd->add_option("--n", args.n, "universe size");
    cmd->add_option("--p", args.p, "moment order (> 2)");
    cmd->add_option("--eps", args.eps, "target relative error in (0, 1]");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_flag("--paper{true},--scaled{false}", args.paper,
                  "parameter mode (default scaled)");
    cmd->add_option("--out", args.out_format, "output format: json|pretty")
        ->check(CLI::IsMember({"json", "pretty"}));
}

ghss::ParamSet derive(const CommonArgs& args)
{
    return args.paper ? ghss::derive_paper_params(args.n, args.p, args.eps)
                      : ghss::derive_scaled_params(args.n, args.p, args.eps);
}

void emit(const nlohmann::json& j, const std::string& format)
{
    if (format == "pretty")
        std::cout << j.dump(2) << '\n';
    else
        std::cout << j.dump() << '\n';
}

ghss::StreamDist parse_dist(const std::string& name)
{
    if (name == "zipf") return ghss::StreamDist::Zipf;
    if (name == "uniform") return ghss::StreamDist::Uniform;
    if (name == "planted") return ghss::StreamDist::Planted;
    throw CLI::ValidationError("--dist", "unknown distribution: " + name);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"F_p moment estimation harness (p > 2, turnstile streams)"};
    app.require_subcommand(1);

    // params: echo the derived parameter set.
    CommonArgs params_args;
    CLI::App* cmd_params = app.add_subcommand("params", "derive and print a parameter set");
    add_common(cmd_params, params_args);

    // gen: write a stream file.
    CommonArgs gen_args;
    std::string gen_dist = "zipf";
    double gen_theta = 1.2;
    std::uint64_t gen_m = 10000;
    double gen_del = 0.0;
    std::int64_t gen_M = 1;
    std::vector<std::int64_t> gen_planted;
    std::string gen_out_file;
    CLI::App* cmd_gen = app.add_subcommand("gen", "generate a turnstile stream file");
    add_common(cmd_gen, gen_args);
    cmd_gen->add_option("--dist", gen_dist, "zipf|uniform|planted");
    cmd_gen->add_option("--theta", gen_theta, "zipf exponent");
    cmd_gen->add_option("--m", gen_m, "total updates");
    cmd_gen->add_option("--del", gen_del, "deletion fraction in [0, 1)");
    cmd_gen->add_option("--max-mag", gen_M, "maximum update magnitude");
    cmd_gen->add_option("--freqs", gen_planted, "planted frequencies (1-based items)");
    cmd_gen->add_option("--file", gen_out_file, "output path (default stdout)");

    // estimate: one stream -> one report.
    CommonArgs est_args;
    std::string est_in_file;
    CLI::App* cmd_est = app.add_subcommand("estimate",
                                           "estimate F_p for a stream (file or stdin)");
    add_common(cmd_est, est_args);
    cmd_est->add_option("--in", est_in_file, "stream file (default stdin)");

    // trials: config file -> trial report.
    std::string trials_config_file;
    std::string trials_out_format = "json";
    CLI::App* cmd_trials = app.add_subcommand("trials", "run seeded trials against the oracle");
    cmd_trials->add_option("--config", trials_config_file, "JSON trial config")->required();
    cmd_trials->add_option("--out", trials_out_format, "output format: json|pretty")
        ->check(CLI::IsMember({"json", "pretty"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_params) {
            emit(derive(params_args).to_json(), params_args.out_format);
        } else if (*cmd_gen) {
            ghss::StreamSpec spec;
            spec.n = gen_args.n;
            spec.dist = parse_dist(gen_dist);
            spec.zipf_theta = gen_theta;
            spec.m = gen_m;
            spec.delete_fraction = gen_del;
            spec.max_magnitude = gen_M;
            spec.planted = gen_planted;
            spec.seed = gen_args.seed;
            const auto updates = ghss::generate_stream(spec);
            if (gen_out_file.empty()) {
                ghss::write_stream(std::cout, updates);
            } else {
                std::ofstream out(gen_out_file);
                if (!out) throw std::runtime_error("cannot open " + gen_out_file);
                ghss::write_stream(out, updates);
            }
        } else if (*cmd_est) {
            std::vector<ghss::Update> updates;
            if (est_in_file.empty()) {
                updates = ghss::read_stream(std::cin);
            } else {
                std::ifstream in(est_in_file);
                if (!in) throw std::runtime_error("cannot open " + est_in_file);
                updates = ghss::read_stream(in);
            }
            ghss::GhssSketch sketch(derive(est_args), est_args.seed);
            for (const auto& u : updates) sketch.update(u.item, u.delta);
            const auto report = sketch.estimate_fp(
                ghss::branch_seed(est_args.seed, 22, 0),
                ghss::branch_seed(est_args.seed, 23, 0));
            emit(report.to_json(), est_args.out_format);
        } else if (*cmd_trials) {
            std::ifstream in(trials_config_file);
            if (!in) throw std::runtime_error("cannot open " + trials_config_file);
            nlohmann::json j;
            in >> j;
            ghss::TrialConfig config;
            config.stream.n = j.at("n");
            config.p = j.at("p");
            config.epsilon = j.at("eps");
            config.trials = j.at("trials");
            config.base_seed = j.value("seed", std::uint64_t{1});
            config.scaled = j.value("scaled", true);
            const auto& stream = j.at("stream");
            config.stream.dist = parse_dist(stream.value("dist", std::string("zipf")));
            config.stream.zipf_theta = stream.value("theta", 1.2);
            config.stream.m = stream.value("m", std::uint64_t{10000});
            config.stream.delete_fraction = stream.value("del", 0.0);
            config.stream.max_magnitude = stream.value("max_mag", std::int64_t{1});
            config.stream.seed = stream.value("seed", config.base_seed);
            if (stream.contains("freqs"))
                config.stream.planted = stream.at("freqs").get<std::vector<std::int64_t>>();
            emit(ghss::run_trials(config).to_json(), trials_out_format);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
