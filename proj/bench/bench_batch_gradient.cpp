// Times one minibatch gradient on the serial reference path versus the OpenMP
// path and reports speedup plus the largest gradient discrepancy.

#include <chrono>
#include <iostream>

#include "devrec/bundle.hpp"
#include "devrec/eval.hpp"
#include "devrec/trainer.hpp"

using namespace devrec;
using clk = std::chrono::steady_clock;

int main(int argc, char** argv) {
    const std::size_t batch_size = argc > 1 ? std::stoul(argv[1]) : 64;
    const int reps = argc > 2 ? std::stoi(argv[2]) : 5;

    auto records = make_synthetic(60, 40, 4, 0.3, 7, 0.5);
    Vocabulary vocab = build_vocab(records, 2000);
    const double ratios[3] = {0.8, 0.1, 0.1};

    DataBundle bundle{vocab, split_dataset(records, ratios, 7), 7};
    auto [dev_cols, srv_cols] = build_leakage_collections(bundle, 200);

    ModelConfig cfg;
    cfg.embed_dim = 16;
    cfg.filters = 8;
    cfg.latent_dim = 8;
    cfg.fm_rank = 4;
    cfg.t_max = 200;
    std::vector<std::string> devs, srvs;
    for (const auto& [id, _] : dev_cols) devs.push_back(id);
    for (const auto& [id, _] : srv_cols) srvs.push_back(id);
    Model model(cfg, vocab.size(), devs, srvs, 7);

    auto examples = resolve_examples(model, bundle.split.train, dev_cols, srv_cols);
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < examples.size() && i < batch_size; ++i) batch.push_back(i);
    std::cout << "pairs_per_batch=" << batch.size() << " reps=" << reps << "\n";

    auto time_path = [&](bool parallel) {
        batch_gradient(model, examples, batch, BetaPolicy::dynamic(), parallel); // warm up
        const auto t0 = clk::now();
        for (int i = 0; i < reps; ++i)
            batch_gradient(model, examples, batch, BetaPolicy::dynamic(), parallel);
        const double sec = std::chrono::duration<double>(clk::now() - t0).count() / reps;
        std::vector<Matrix> grads;
        for (const auto& e : model.params().entries()) grads.push_back(e.grad);
        return std::pair{sec, grads};
    };

    auto [serial_sec, serial_grads] = time_path(false);
    auto [parallel_sec, parallel_grads] = time_path(true);

    double max_diff = 0.0;
    for (std::size_t i = 0; i < serial_grads.size(); ++i)
        for (std::size_t j = 0; j < serial_grads[i].data.size(); ++j)
            max_diff = std::max(max_diff, std::abs(serial_grads[i].data[j] -
                                                   parallel_grads[i].data[j]));

    std::cout << "serial_sec_per_batch=" << serial_sec
              << "\nparallel_sec_per_batch=" << parallel_sec
              << "\nspeedup=" << serial_sec / parallel_sec
              << "\nmax_grad_diff=" << max_diff << "\n";
    return max_diff < 1e-9 ? 0 : 1;
}
