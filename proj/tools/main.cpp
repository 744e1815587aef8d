#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "precoder/evaluation.hpp"
#include "precoder/io.hpp"
#include "precoder/log.hpp"

namespace fs = std::filesystem;
using namespace precoder;
using precoder::io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 20240000;
    std::size_t threads = 0; // 0: hardware concurrency
    std::string out_dir = ".";

    std::size_t resolved_threads() const {
        if (threads > 0) return threads;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? hw : 1;
    }
};

struct RunConfig {
    DatasetSpec dataset;
    SolverConfig solver;
    NetworkConfig network;
    TrainConfig train;
    bool dataset_seed_set = false;
    bool solver_seed_set = false;
    bool network_seed_set = false;
    bool train_seed_set = false;
};

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw Error(ErrorCode::InvalidArgument, "unknown key '" + key + "' in " + where);
    }
}

RunConfig load_run_config(const GlobalOptions& g) {
    RunConfig run;
    json j;
    if (!g.config_path.empty()) {
        std::ifstream in(g.config_path);
        if (!in) throw Error(ErrorCode::IoError, "cannot open config: " + g.config_path);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, std::string("bad config JSON: ") + e.what());
        }
    }
    check_keys(j, {"dataset", "solver", "network", "train"}, "config");

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        check_keys(d, {"num_channels", "m", "n_min", "n_max", "power", "modes", "seed"},
                   "config.dataset");
        run.dataset = io::spec_from_json(d);
        run.dataset_seed_set = d.contains("seed");
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        check_keys(s,
                   {"max_iters", "grad_step", "fd_epsilon", "restarts", "tol", "penalty_weight",
                    "seed"},
                   "config.solver");
        run.solver.max_iters = s.value("max_iters", run.solver.max_iters);
        run.solver.grad_step = s.value("grad_step", run.solver.grad_step);
        run.solver.fd_epsilon = s.value("fd_epsilon", run.solver.fd_epsilon);
        run.solver.restarts = s.value("restarts", run.solver.restarts);
        run.solver.tol = s.value("tol", run.solver.tol);
        run.solver.penalty_weight = s.value("penalty_weight", run.solver.penalty_weight);
        run.solver.seed = s.value("seed", run.solver.seed);
        run.solver_seed_set = s.contains("seed");
        run.solver.validate();
    }
    if (j.contains("network")) {
        const json& n = j.at("network");
        check_keys(n, {"input_dim", "hidden", "output_dim", "prelu_init", "seed"},
                   "config.network");
        run.network.input_dim = n.value("input_dim", run.network.input_dim);
        if (n.contains("hidden"))
            run.network.hidden = n.at("hidden").get<std::vector<std::size_t>>();
        run.network.output_dim = n.value("output_dim", run.network.output_dim);
        run.network.prelu_init = n.value("prelu_init", run.network.prelu_init);
        run.network.seed = n.value("seed", run.network.seed);
        run.network_seed_set = n.contains("seed");
        run.network.validate();
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t,
                   {"initial_lr", "lr_drop_factor", "lr_drop_period_epochs", "batch_size",
                    "max_epochs", "validation_fraction", "seed"},
                   "config.train");
        run.train.initial_lr = t.value("initial_lr", run.train.initial_lr);
        run.train.lr_drop_factor = t.value("lr_drop_factor", run.train.lr_drop_factor);
        run.train.lr_drop_period_epochs =
            t.value("lr_drop_period_epochs", run.train.lr_drop_period_epochs);
        run.train.batch_size = t.value("batch_size", run.train.batch_size);
        run.train.max_epochs = t.value("max_epochs", run.train.max_epochs);
        run.train.validation_fraction =
            t.value("validation_fraction", run.train.validation_fraction);
        run.train.seed = t.value("seed", run.train.seed);
        run.train_seed_set = t.contains("seed");
        run.train.validate();
    }
    return run;
}

/// One master seed fans out per subsystem unless the config pinned it.
void resolve_seeds(RunConfig& run, const GlobalOptions& g) {
    if (!run.dataset_seed_set) run.dataset.seed = derive_seed(g.seed, 1);
    if (!run.solver_seed_set) run.solver.seed = derive_seed(g.seed, 2);
    if (!run.network_seed_set) run.network.seed = derive_seed(g.seed, 3);
    if (!run.train_seed_set) run.train.seed = derive_seed(g.seed, 4);
}

json network_to_json(const NetworkConfig& n) {
    json j;
    j["input_dim"] = n.input_dim;
    j["hidden"] = n.hidden;
    j["output_dim"] = n.output_dim;
    j["prelu_init"] = n.prelu_init;
    j["seed"] = n.seed;
    return j;
}

json solver_to_json(const SolverConfig& s) {
    json j;
    j["max_iters"] = s.max_iters;
    j["grad_step"] = s.grad_step;
    j["fd_epsilon"] = s.fd_epsilon;
    j["restarts"] = s.restarts;
    j["tol"] = s.tol;
    j["penalty_weight"] = s.penalty_weight;
    j["seed"] = s.seed;
    return j;
}

json train_to_json(const TrainConfig& t) {
    json j;
    j["initial_lr"] = t.initial_lr;
    j["lr_drop_factor"] = t.lr_drop_factor;
    j["lr_drop_period_epochs"] = t.lr_drop_period_epochs;
    j["batch_size"] = t.batch_size;
    j["max_epochs"] = t.max_epochs;
    j["validation_fraction"] = t.validation_fraction;
    j["seed"] = t.seed;
    return j;
}

/// Every command echoes the fully resolved configuration for reproducibility.
void echo_config(const std::string& command, const GlobalOptions& g, const RunConfig& run) {
    json echo;
    echo["command"] = command;
    echo["seed"] = g.seed;
    echo["threads"] = g.resolved_threads();
    echo["out"] = g.out_dir;
    echo["dataset"] = io::spec_to_json(run.dataset);
    echo["solver"] = solver_to_json(run.solver);
    echo["network"] = network_to_json(run.network);
    echo["train"] = train_to_json(run.train);
    std::cerr << echo.dump() << '\n';
}

std::vector<int> parse_modes(const std::string& arg) {
    if (arg == "all" || arg.empty()) {
        std::vector<int> all;
        for (int k = 1; k <= Mode::kCount; ++k) all.push_back(k);
        return all;
    }
    std::vector<int> out;
    std::stringstream ss(arg);
    std::string token;
    while (std::getline(ss, token, ','))
        if (!token.empty()) out.push_back(Mode::from_name(token).index());
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no modes in '" + arg + "'");
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
}

json report_to_json(const SolveReport& rep, const Mode& mode, const std::string& engine) {
    json j;
    j["mode"] = mode.name();
    j["engine"] = engine;
    j["objective"] = rep.objective;
    j["units"] = mode.kind() == ObjectiveKind::Eh ? "W" : "bit/s/Hz";
    j["q"] = io::covariance_to_json(rep.q_opt);
    j["iterations"] = rep.iterations;
    j["restarts"] = rep.restarts_used;
    j["constraint_violation"] = rep.constraint_violation;
    j["wall_time_s"] = rep.wall_time;
    if (rep.case_tag) j["case"] = to_string(*rep.case_tag);
    return j;
}

int cmd_gen_data(const GlobalOptions& g, RunConfig run, std::size_t channels,
                 const std::string& modes) {
    if (channels > 0) run.dataset.num_channels = channels;
    run.dataset.mode_indices = parse_modes(modes);
    echo_config("gen-data", g, run);

    fs::create_directories(g.out_dir);
    const fs::path data_path = fs::path(g.out_dir) / "dataset.jsonl";
    const fs::path manifest_path = fs::path(g.out_dir) / "manifest.json";
    std::ofstream out(data_path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + data_path.string());

    const DatasetManifest manifest =
        generate_dataset(run.dataset, run.solver, out, g.resolved_threads());
    write_file(manifest_path, io::manifest_to_json(manifest).dump(2) + "\n");
    std::cout << manifest_path.string() << '\n';
    return manifest.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_solve(const GlobalOptions& g, const RunConfig& run, const std::string& channel_path,
              const std::string& mode_name, const std::string& engine,
              const std::string& checkpoint_path) {
    echo_config("solve", g, run);
    const ChannelPair ch = io::load_channel(channel_path);
    const Mode mode = Mode::from_name(mode_name);

    SolveReport rep;
    if (engine == "rp" || engine == "closed") {
        if (engine == "closed" && mode.index() > 2)
            throw Error(ErrorCode::InvalidArgument,
                        "closed-form engine only covers M1 and M2, use rp or dnn");
        rep = solve_mode(ch, mode, run.solver);
    } else if (engine == "dnn") {
        if (checkpoint_path.empty())
            throw Error(ErrorCode::InvalidArgument, "dnn engine needs --checkpoint");
        const Network net = network_from_checkpoint(load_checkpoint(checkpoint_path));
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = net.forward(build_feature(ch, mode));
        rep.q_opt = assemble_covariance(out, ch.power);
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        switch (mode.kind()) {
        case ObjectiveKind::Wit:
        case ObjectiveKind::Swipt: rep.objective = rate_wit(ch, rep.q_opt, 1); break;
        case ObjectiveKind::Eh: rep.objective = harvested_energy(ch, rep.q_opt); break;
        case ObjectiveKind::Secrecy: rep.objective = secrecy_rate(ch, rep.q_opt); break;
        case ObjectiveKind::Multicast: rep.objective = multicast_rate(ch, rep.q_opt); break;
        }
        if (mode.kind() == ObjectiveKind::Swipt) {
            const double e_bar = energy_bounds(ch).threshold(*mode.eh_level());
            rep.constraint_violation = std::max(0.0, e_bar - harvested_energy(ch, rep.q_opt));
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, "engine must be rp, closed, or dnn");
    }
    std::cout << report_to_json(rep, mode, engine).dump(2) << '\n';
    return kExitOk;
}

int cmd_train(const GlobalOptions& g, RunConfig run, const std::string& data_path,
              std::size_t epochs, std::size_t batch) {
    if (epochs > 0) run.train.max_epochs = epochs;
    if (batch > 0) run.train.batch_size = batch;
    echo_config("train", g, run);

    const auto data = io::read_samples_file(data_path);
    Network net(run.network);
    const Checkpoint ckpt = train(net, data, run.train);

    fs::create_directories(g.out_dir);
    const fs::path path = fs::path(g.out_dir) / "checkpoint.bin";
    save_checkpoint(ckpt, path.string());
    std::cout << path.string() << '\n';
    return kExitOk;
}

int cmd_eval(const GlobalOptions& g, const RunConfig& run, const std::string& checkpoint_path,
             const std::string& testset_path) {
    echo_config("eval", g, run);
    const Network net = network_from_checkpoint(load_checkpoint(checkpoint_path));
    const auto test = io::read_samples_file(testset_path);
    const EvalReport report = evaluate_testset(net, test, run.dataset.power);

    fs::create_directories(g.out_dir);
    const fs::path csv_path = fs::path(g.out_dir) / "eval.csv";
    const fs::path json_path = fs::path(g.out_dir) / "eval.json";
    write_file(csv_path, report.to_csv());
    write_file(json_path, report.to_json() + "\n");
    std::cout << csv_path.string() << '\n' << json_path.string() << '\n';

    for (const ModeEval& m : report.modes)
        if (m.degenerate_reference) return kExitPartial;
    return kExitOk;
}

int cmd_sweep_region(const GlobalOptions& g, const RunConfig& run,
                     const std::string& channel_path, double power, std::size_t levels,
                     const std::string& engine, const std::string& checkpoint_path) {
    echo_config("sweep-region", g, run);
    ChannelPair ch = io::load_channel(channel_path);
    if (power > 0.0) ch = ChannelPair(ch.h1, ch.h2, power);

    std::vector<double> qs(levels);
    for (std::size_t i = 0; i < levels; ++i)
        qs[i] = levels > 1 ? static_cast<double>(i) / static_cast<double>(levels - 1) : 0.0;

    std::vector<RegionPoint> points;
    if (engine == "rp") {
        points = sweep_region(ch, qs, Engine::Rp, run.solver);
    } else if (engine == "dnn") {
        if (checkpoint_path.empty())
            throw Error(ErrorCode::InvalidArgument, "dnn engine needs --checkpoint");
        const Network net = network_from_checkpoint(load_checkpoint(checkpoint_path));
        points = sweep_region(ch, qs, Engine::Dnn, run.solver, &net);
    } else {
        throw Error(ErrorCode::InvalidArgument, "engine must be rp or dnn");
    }

    std::ostringstream csv;
    csv << "q,rate_bit_s_hz,energy_w\n";
    for (const RegionPoint& p : points) csv << p.level << ',' << p.rate << ',' << p.energy << '\n';

    fs::create_directories(g.out_dir);
    const fs::path path = fs::path(g.out_dir) / "region.csv";
    write_file(path, csv.str());
    std::cout << path.string() << '\n';
    return kExitOk;
}

int cmd_bench(const GlobalOptions& g, const RunConfig& run, std::size_t channels,
              const std::string& modes, const std::string& engines_arg,
              const std::string& batch_arg, const std::string& checkpoint_path) {
    echo_config("bench", g, run);

    std::vector<ChannelPair> chans;
    Rng rng(derive_seed(g.seed, 0xbe9c));
    DatasetSpec spec = run.dataset;
    for (std::size_t i = 0; i < channels; ++i) chans.push_back(sample_channel(spec, rng));

    std::vector<Mode> mode_list;
    for (int k : parse_modes(modes)) mode_list.push_back(Mode::from_index(k));

    std::vector<Engine> engines;
    std::unique_ptr<Network> net;
    {
        std::stringstream ss(engines_arg);
        std::string token;
        while (std::getline(ss, token, ',')) {
            if (token == "rp") {
                engines.push_back(Engine::Rp);
            } else if (token == "dnn") {
                if (checkpoint_path.empty())
                    throw Error(ErrorCode::InvalidArgument, "dnn engine needs --checkpoint");
                net = std::make_unique<Network>(
                    network_from_checkpoint(load_checkpoint(checkpoint_path)));
                engines.push_back(Engine::Dnn);
            } else if (!token.empty()) {
                throw Error(ErrorCode::InvalidArgument, "unknown engine '" + token + "'");
            }
        }
    }

    std::vector<std::size_t> batches;
    {
        std::stringstream ss(batch_arg);
        std::string token;
        while (std::getline(ss, token, ','))
            if (!token.empty()) batches.push_back(std::stoul(token));
    }
    if (batches.empty()) batches = {1, 10, 100};

    const auto rows = benchmark(chans, mode_list, engines, batches, run.solver, net.get());
    const std::string csv = timing_to_csv(rows);

    fs::create_directories(g.out_dir);
    const fs::path path = fs::path(g.out_dir) / "bench.csv";
    write_file(path, csv);
    std::cout << csv;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transmit covariance designer: closed-form/rotation solvers and the unified "
                 "network precoder"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "master seed, split per subsystem");
    app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
    app.add_option("--out", g.out_dir, "output directory");

    auto* gen = app.add_subcommand("gen-data", "generate a labeled dataset (JSONL + manifest)");
    std::size_t gen_channels = 0;
    std::string gen_modes = "all";
    gen->add_option("--channels", gen_channels, "number of channel realizations");
    gen->add_option("--modes", gen_modes, "all or comma list, e.g. M1,M3,M12");

    auto* solve = app.add_subcommand("solve", "solve one channel for one mode");
    std::string solve_channel, solve_mode_name = "M1", solve_engine = "rp", solve_ckpt;
    solve->add_option("--channel", solve_channel, "channel JSON file")->required();
    solve->add_option("--mode", solve_mode_name, "M1..M13");
    solve->add_option("--engine", solve_engine, "rp, closed, or dnn");
    solve->add_option("--checkpoint", solve_ckpt, "checkpoint for the dnn engine");

    auto* tr = app.add_subcommand("train", "train the network on a labeled dataset");
    std::string train_data;
    std::size_t train_epochs = 0, train_batch = 0;
    tr->add_option("--data", train_data, "dataset JSONL")->required();
    tr->add_option("--epochs", train_epochs, "override max epochs");
    tr->add_option("--batch", train_batch, "override mini-batch size");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint against a labeled test set");
    std::string eval_ckpt, eval_testset;
    ev->add_option("--checkpoint", eval_ckpt)->required();
    ev->add_option("--testset", eval_testset, "dataset JSONL with reference labels")->required();

    auto* sweep = app.add_subcommand("sweep-region", "rate-energy frontier for one channel");
    std::string sweep_channel, sweep_engine = "rp", sweep_ckpt;
    double sweep_power = 0.0;
    std::size_t sweep_levels = 11;
    sweep->add_option("--channels", sweep_channel, "channel JSON file")->required();
    sweep->add_option("--power", sweep_power, "override the file's power budget");
    sweep->add_option("--levels", sweep_levels, "number of EH levels across [0, 1]");
    sweep->add_option("--engine", sweep_engine, "rp or dnn");
    sweep->add_option("--checkpoint", sweep_ckpt, "checkpoint for the dnn engine");

    auto* bench = app.add_subcommand("bench", "time solvers vs batched network inference");
    std::size_t bench_channels = 20;
    std::string bench_modes = "all", bench_engines = "rp,dnn", bench_batches = "1,10,100",
                bench_ckpt;
    bench->add_option("--channels", bench_channels, "random channels to time");
    bench->add_option("--modes", bench_modes);
    bench->add_option("--engines", bench_engines, "comma list of rp,dnn");
    bench->add_option("--batch-sizes", bench_batches, "dnn batch sizes, comma list");
    bench->add_option("--checkpoint", bench_ckpt, "checkpoint for the dnn engine");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig run = load_run_config(g);
        resolve_seeds(run, g);

        if (gen->parsed()) return cmd_gen_data(g, std::move(run), gen_channels, gen_modes);
        if (solve->parsed())
            return cmd_solve(g, run, solve_channel, solve_mode_name, solve_engine, solve_ckpt);
        if (tr->parsed()) return cmd_train(g, std::move(run), train_data, train_epochs, train_batch);
        if (ev->parsed()) return cmd_eval(g, run, eval_ckpt, eval_testset);
        if (sweep->parsed())
            return cmd_sweep_region(g, run, sweep_channel, sweep_power, sweep_levels, sweep_engine,
                                    sweep_ckpt);
        if (bench->parsed())
            return cmd_bench(g, run, bench_channels, bench_modes, bench_engines, bench_batches,
                             bench_ckpt);
        return kExitUsage;
    } catch (const Error& e) {
        log::error("%s (%s)", e.what(), to_string(e.code()));
        switch (e.code()) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::IoError:
        case ErrorCode::UnsupportedM:
        case ErrorCode::IndexOrder:
        case ErrorCode::DimensionMismatch: return kExitUsage;
        default: return kExitNumerical;
        }
    } catch (const std::exception& e) {
        log::error("unexpected failure: %s", e.what());
        return kExitNumerical;
    }
}
