// Command-line front end: ingest | train | evaluate | recommend | gradcheck |
// sweep | stats. Every command is reproducible from its config plus one seed.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "devrec/bundle.hpp"
#include "devrec/eval.hpp"
#include "devrec/grad_check.hpp"
#include "devrec/trainer.hpp"

using namespace devrec;

namespace {

struct Options {
    std::string data;
    std::string out;
    std::string checkpoint;
    std::string device_id;
    std::string mode = "fused-dynamic";
    std::uint64_t seed = 42;
    std::size_t k = 15;
    double relevance_threshold = 4.0;
    bool no_ranking = false;
    bool ablation = false;
    bool serial = false;
    std::vector<std::size_t> f_values = {5, 10, 20};

    ModelConfig model;
    TrainConfig train;
};

void add_model_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--embed-dim", o.model.embed_dim, "Word embedding size");
    cmd->add_option("--filters", o.model.filters, "Convolution filter count");
    cmd->add_option("--window", o.model.window, "Contextual window size");
    cmd->add_option("--abs-window", o.model.abs_window, "Abstraction window size");
    cmd->add_option("--latent-dim", o.model.latent_dim, "Engagement latent size");
    cmd->add_option("--fm-rank", o.model.fm_rank, "FM factorization rank");
    cmd->add_option("--t-max", o.model.t_max, "Collection length cap");
    cmd->add_option("--lambda", o.model.lambda, "L2 strength");
}

void add_train_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--epochs", o.train.epochs, "Max epochs");
    cmd->add_option("--batch-size", o.train.batch_size, "Minibatch size");
    cmd->add_option("--lr", o.train.learning_rate, "Learning rate");
    cmd->add_option("--optimizer", o.train.optimizer, "adam or sgd");
    cmd->add_option("--patience", o.train.patience, "Early-stop patience");
    cmd->add_option("--mode", o.mode,
                    "fused-dynamic | fused-static | review-only | engagement-only | "
                    "linear-fused");
    cmd->add_flag("--serial", o.serial, "Disable the OpenMP batch path");
}

void print_header(const char* command, std::uint64_t seed) {
    std::cout << "# devrec " << command << " seed=" << seed << "\n";
}

TrainConfig resolve_train(const Options& o) {
    TrainConfig cfg = o.train;
    cfg.seed = o.seed;
    cfg.mode = train_mode_from_name(o.mode);
    cfg.parallel = !o.serial;
    return cfg;
}

int cmd_stats(const Options& o) {
    ParseResult parsed = parse_reviews_file(o.data);
    StatsReport s = dataset_stats(parsed.records);
    print_header("stats", o.seed);
    std::cout << "records=" << parsed.records.size() << " skipped=" << parsed.skipped
              << "\ndevices=" << s.users << " services=" << s.items
              << " ratings=" << s.ratings << " density=" << s.density << "\n";
    return 0;
}

int cmd_ingest(const Options& o) {
    print_header("ingest", o.seed);
    ParseResult parsed = parse_reviews_file(o.data);
    StatsReport s = dataset_stats(parsed.records);
    std::cout << "records=" << parsed.records.size() << " skipped=" << parsed.skipped
              << " devices=" << s.users << " services=" << s.items
              << " density=" << s.density << "\n";

    DataBundle bundle;
    bundle.seed = o.seed;
    bundle.vocab = build_vocab(parsed.records, o.model.vocab_cap);
    const double ratios[3] = {0.8, 0.1, 0.1};
    bundle.split = split_dataset(parsed.records, ratios, o.seed);
    save_bundle(bundle, o.out);
    std::cout << "vocab=" << bundle.vocab.size() << " train=" << bundle.split.train.size()
              << " val=" << bundle.split.validation.size()
              << " test=" << bundle.split.test.size() << " -> " << o.out << "\n";
    return 0;
}

int cmd_train(const Options& o) {
    print_header("train", o.seed);
    DataBundle bundle = load_bundle(o.data);
    TrainConfig cfg = resolve_train(o);
    auto [dev_cols, srv_cols] = build_leakage_collections(bundle, o.model.t_max);
    TrainResult result =
        train(o.model, cfg, bundle.vocab, bundle.split, dev_cols, srv_cols, &std::cout);
    save_checkpoint(*result.model, cfg.mode, bundle.vocab, o.checkpoint);
    std::cout << "checkpoint=" << o.checkpoint << " epochs_run=" << result.history.size()
              << "\n";
    return 0;
}

int cmd_evaluate(const Options& o) {
    print_header("evaluate", o.seed);
    DataBundle bundle = load_bundle(o.data);
    EvalOptions opts;
    opts.k = o.k;
    opts.relevance_threshold = o.relevance_threshold;
    opts.ranking = !o.no_ranking;

    if (o.ablation) {
        TrainConfig cfg = resolve_train(o);
        auto [dev_cols, srv_cols] = build_leakage_collections(bundle, o.model.t_max);
        std::vector<TrainMode> modes = {TrainMode::FusedDynamic, TrainMode::FusedStatic,
                                        TrainMode::ReviewOnly, TrainMode::EngagementOnly,
                                        TrainMode::LinearFused};
        auto reports =
            ablation_run(modes, o.model, cfg, bundle.vocab, bundle.split, dev_cols,
                         srv_cols, opts, &std::cout);
        std::cout << MetricsReport::csv_header() << "\n";
        for (const MetricsReport& r : reports) std::cout << r.to_csv_row() << "\n";
        return 0;
    }

    Checkpoint ck = load_checkpoint(o.checkpoint);
    auto [dev_cols, srv_cols] =
        build_leakage_collections(bundle, ck.model->config().t_max);
    MetricsReport report = evaluate_model(*ck.model, bundle.split, dev_cols, srv_cols,
                                          beta_policy_for(ck.mode), opts);
    report.label = train_mode_name(ck.mode);
    std::cout << report.to_text() << "\n";
    return 0;
}

int cmd_recommend(const Options& o) {
    print_header("recommend", o.seed);
    DataBundle bundle = load_bundle(o.data);
    Checkpoint ck = load_checkpoint(o.checkpoint);
    auto [dev_cols, srv_cols] =
        build_leakage_collections(bundle, ck.model->config().t_max);

    std::vector<std::string> candidates;
    for (const auto& [id, _] : ck.model->service_map()) candidates.push_back(id);
    if (candidates.empty())
        for (const auto& [id, _] : srv_cols) candidates.push_back(id);

    RankedList list = rank_candidates(*ck.model, dev_cols, srv_cols, o.device_id,
                                      candidates, o.k, beta_policy_for(ck.mode));
    std::cout << "device=" << o.device_id << " k=" << o.k
              << (ck.model->device_index(o.device_id) == 0 ? " (cold start)" : "")
              << "\n";
    for (std::size_t i = 0; i < list.entries.size(); ++i)
        std::cout << (i + 1) << ". " << list.entries[i].first << " "
                  << list.entries[i].second << "\n";
    return 0;
}

// Tiny fused instance checked end to end against central differences.
int cmd_gradcheck(const Options& o) {
    print_header("gradcheck", o.seed);
    ModelConfig cfg;
    cfg.embed_dim = 8;
    cfg.filters = 4;
    cfg.latent_dim = 4;
    cfg.fm_rank = 2;
    cfg.lambda = 1e-4;
    const std::size_t vocab_size = 50, n_pairs = 6;
    std::vector<std::string> devs = {"d0", "d1", "d2"}, srvs = {"s0", "s1", "s2"};
    Model model(cfg, vocab_size, devs, srvs, o.seed);

    std::mt19937_64 rng(o.seed + 1);
    std::vector<std::vector<int>> dev_tokens, srv_tokens;
    std::vector<std::size_t> dev_idx, srv_idx;
    std::vector<double> ratings, frozen_betas;
    for (std::size_t i = 0; i < n_pairs; ++i) {
        std::vector<int> td(2 + rng() % 11), ts(2 + rng() % 11);
        for (int& v : td) v = static_cast<int>(rng() % vocab_size);
        for (int& v : ts) v = static_cast<int>(rng() % vocab_size);
        dev_tokens.push_back(td);
        srv_tokens.push_back(ts);
        dev_idx.push_back(1 + rng() % 3);
        srv_idx.push_back(1 + rng() % 3);
        ratings.push_back(1.0 + static_cast<double>(rng() % 5));
    }
    for (std::size_t i = 0; i < n_pairs; ++i)
        frozen_betas.push_back(
            model.forward_pair(dev_tokens[i], srv_tokens[i], dev_idx[i], srv_idx[i]).beta);

    auto loss = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_pairs; ++i) {
            PairForward fwd =
                model.forward_pair(dev_tokens[i], srv_tokens[i], dev_idx[i], srv_idx[i],
                                   BetaPolicy::dynamic(), frozen_betas[i]);
            const double r = fwd.r_hat - ratings[i];
            acc += r * r;
        }
        return acc + cfg.lambda * model.params().squared_norm_regularized();
    };
    auto grads = [&] {
        model.params().zero_grads();
        for (std::size_t i = 0; i < n_pairs; ++i) {
            PairForward fwd =
                model.forward_pair(dev_tokens[i], srv_tokens[i], dev_idx[i], srv_idx[i],
                                   BetaPolicy::dynamic(), frozen_betas[i]);
            model.backward_pair(fwd, 2.0 * (fwd.r_hat - ratings[i]));
        }
        for (auto& e : model.params().entries())
            if (e.regularized)
                for (std::size_t j = 0; j < e.grad.data.size(); ++j)
                    e.grad.data[j] += 2.0 * cfg.lambda * e.value.data[j];
    };

    GradCheckReport report = grad_check(loss, grads, model.params(), 1e-5);
    for (const auto& t : report.tensors)
        std::cout << t.name << " max_rel_error=" << t.max_rel_error
                  << " coords=" << t.coords_checked << "\n";
    std::cout << "max_rel_error=" << report.max_rel_error << "\n";
    if (report.max_rel_error >= 1e-3) {
        std::cerr << "gradient check failed (threshold 1e-3)\n";
        return 1;
    }
    return 0;
}

int cmd_sweep(const Options& o) {
    print_header("sweep", o.seed);
    DataBundle bundle = load_bundle(o.data);
    TrainConfig cfg = resolve_train(o);
    EvalOptions opts;
    opts.k = o.k;
    opts.ranking = false;
    auto [dev_cols, srv_cols] = build_leakage_collections(bundle, o.model.t_max);

    std::cout << "f,mae,rmse\n";
    for (std::size_t f : o.f_values) {
        ModelConfig mcfg = o.model;
        mcfg.filters = f;
        TrainResult r = train(mcfg, cfg, bundle.vocab, bundle.split, dev_cols, srv_cols);
        MetricsReport report = evaluate_model(*r.model, bundle.split, dev_cols, srv_cols,
                                              beta_policy_for(cfg.mode), opts);
        std::cout << f << "," << report.mae << "," << report.rmse << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-aware device-service recommender"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (key=value, sections per command)");

    Options o;
    app.add_option("--seed", o.seed, "Global random seed")->envname("DEVREC_SEED");

    auto* stats = app.add_subcommand("stats", "Dataset statistics");
    stats->add_option("--data", o.data, "Review JSON-lines file")
        ->envname("DEVREC_DATA")
        ->required();

    auto* ingest = app.add_subcommand("ingest", "Parse, split, and persist a dataset");
    ingest->add_option("--data", o.data, "Review JSON-lines file")
        ->envname("DEVREC_DATA")
        ->required();
    ingest->add_option("--out", o.out, "Bundle output path")->required();
    ingest->add_option("--vocab-cap", o.model.vocab_cap, "Vocabulary cap");

    auto* train_cmd = app.add_subcommand("train", "Train and write a checkpoint");
    train_cmd->add_option("--data", o.data, "Bundle path")->required();
    train_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint output path")
        ->required();
    add_model_flags(train_cmd, o);
    add_train_flags(train_cmd, o);

    auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
    eval_cmd->add_option("--data", o.data, "Bundle path")->required();
    eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint path");
    eval_cmd->add_option("--k", o.k, "Ranking cutoff");
    eval_cmd->add_option("--threshold", o.relevance_threshold, "Relevance threshold");
    eval_cmd->add_flag("--no-ranking", o.no_ranking, "Skip top-k ranking metrics");
    eval_cmd->add_flag("--ablation", o.ablation, "Retrain and report every mode");
    add_model_flags(eval_cmd, o);
    add_train_flags(eval_cmd, o);

    auto* rec = app.add_subcommand("recommend", "Top-k services for one device");
    rec->add_option("--data", o.data, "Bundle path")->required();
    rec->add_option("--checkpoint", o.checkpoint, "Checkpoint path")->required();
    rec->add_option("--device", o.device_id, "Device id")->required();
    rec->add_option("--k", o.k, "List length");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient audit");
    (void)gc;

    auto* sweep = app.add_subcommand("sweep", "MAE versus filter count");
    sweep->add_option("--data", o.data, "Bundle path")->required();
    sweep->add_option("--f", o.f_values, "Filter counts to try")->delimiter(',');
    sweep->add_option("--k", o.k, "Ranking cutoff");
    add_model_flags(sweep, o);
    add_train_flags(sweep, o);

    // let the global --seed appear after the subcommand name
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (stats->parsed()) return cmd_stats(o);
        if (ingest->parsed()) return cmd_ingest(o);
        if (train_cmd->parsed()) return cmd_train(o);
        if (eval_cmd->parsed()) return cmd_evaluate(o);
        if (rec->parsed()) return cmd_recommend(o);
        if (gc->parsed()) return cmd_gradcheck(o);
        if (sweep->parsed()) return cmd_sweep(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
