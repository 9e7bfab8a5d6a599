#pragma once
// Deterministic 1vsAll training loop. Each epoch reshuffles the train triples
// with a stream keyed by (seed, epoch), so a run is a pure function of the
// config and a checkpoint resume replays the identical trajectory.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "kkge/adam.hpp"
#include "kkge/dataset.hpp"
#include "kkge/errors.hpp"
#include "kkge/evaluator.hpp"
#include "kkge/losses.hpp"
#include "kkge/model.hpp"
#include "kkge/rng.hpp"

namespace kkge {

struct TrainConfig {
    Variant variant = Variant::distmult;
    int d = 16;
    LossSpec loss;
    int epochs = 1000;
    double lr = 0.01;
    int batch_size = 1024;
    std::uint64_t seed = 1;
    bool reciprocal = false;        // applied by the caller before training
    double noise_fraction = 0.0;    // applied by the caller before training
    std::string train_path, valid_path, test_path;
    int eval_every = 0;  // 0: evaluate only after training

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
        if (d < 1) throw ConfigError("dimension must be >= 1");
        if (lr <= 0.0) throw ConfigError("learning rate must be positive");
        if (loss_needs_alpha(loss.kind) && !(loss.alpha > 0.0 && loss.alpha < 1.0))
            throw ConfigError("alpha must be in (0, 1) for smoothing / relaxation losses");
    }
};

struct TrainLog {
    std::vector<double> epoch_loss;     // mean loss over the epoch's batches
    std::vector<double> epoch_seconds;  // wall clock per epoch
    std::vector<std::pair<int, double>> mid_eval_mrr;  // (epoch, test MRR) when eval_every > 0
};

struct TrainResult {
    ModelState model;
    AdamState adam;
    TrainLog log;
};

// Epoch shuffles depend only on (seed, epoch, n).
inline std::vector<std::uint32_t> epoch_order(std::uint64_t seed, int epoch, std::size_t n) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng = Rng::stream(seed, "shuffle", static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    return order;
}

// Continue training from start_epoch (exclusive of work already done) through
// config.epochs. `store` must already carry any reciprocal / noise
// augmentation the config describes.
inline void train_epochs(const TripleStore& store, const TrainConfig& config, ModelState& model,
                         AdamState& adam, int start_epoch, TrainLog& log) {
    const std::size_t n_train = store.train.size();
    const auto n_entities = static_cast<std::size_t>(store.num_entities());

    Vec row_logits(n_entities), row_grad(n_entities);
    for (int epoch = start_epoch; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<std::uint32_t> order = epoch_order(config.seed, epoch, n_train);
        double loss_sum = 0.0;
        int n_batches = 0;

        for (std::size_t base = 0; base < n_train; base += config.batch_size) {
            const std::size_t end = std::min(n_train, base + config.batch_size);
            const int b = static_cast<int>(end - base);
            std::vector<std::int32_t> heads(b), rels(b), tails(b);
            for (int i = 0; i < b; ++i) {
                const Triple& t = store.train[order[base + i]];
                heads[i] = t.head;
                rels[i] = t.rel;
                tails[i] = t.tail;
            }

            ForwardCache cache;
            Mat logits = forward_batch(model, heads, rels, Mode::train, /*update_running=*/true,
                                       cache);
            Mat dlogits(b, static_cast<int>(n_entities));
            double batch_loss = 0.0;
            for (int i = 0; i < b; ++i) {
                std::copy_n(logits.row(i), n_entities, row_logits.begin());
                batch_loss += loss_value_grad(config.loss, row_logits,
                                              static_cast<std::size_t>(tails[i]), row_grad);
                double* dst = dlogits.row(i);
                for (std::size_t j = 0; j < n_entities; ++j) dst[j] = row_grad[j] / b;
            }
            batch_loss /= b;
            if (!std::isfinite(batch_loss))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(n_batches) + ", loss " +
                                   loss_name(config.loss.kind));
            loss_sum += batch_loss;
            ++n_batches;

            Gradients grads = backward(model, cache, dlogits);
            adam_step(model, grads, adam);
        }

        log.epoch_loss.push_back(loss_sum / n_batches);
        log.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0 &&
            !store.test.empty()) {
            EvalReport rep = evaluate(model, store, "test");
            log.mid_eval_mrr.emplace_back(epoch + 1, rep.mrr);
        }
    }
}

inline TrainResult train(const TripleStore& store, const TrainConfig& config) {
    config.validate();
    if (store.train.empty()) throw DataError("train: empty train split");
    TrainResult result;
    result.model =
        init(config.variant, config.d, store.num_entities(), store.num_relations(), config.seed);
    result.adam = AdamState::for_model(result.model, config.lr);
    train_epochs(store, config, result.model, result.adam, 0, result.log);
    return result;
}

// Mean loss of a full pass over the train split without updating anything;
// used for descent sanity checks.
inline double mean_loss(ModelState& model, const TripleStore& store, const TrainConfig& config) {
    const std::size_t n_train = store.train.size();
    const auto n_entities = static_cast<std::size_t>(store.num_entities());
    double loss_sum = 0.0;
    int n_batches = 0;
    Vec row_logits(n_entities), row_grad(n_entities);
    for (std::size_t base = 0; base < n_train; base += config.batch_size) {
        const std::size_t end = std::min(n_train, base + config.batch_size);
        const int b = static_cast<int>(end - base);
        std::vector<std::int32_t> heads(b), rels(b), tails(b);
        for (int i = 0; i < b; ++i) {
            const Triple& t = store.train[base + i];
            heads[i] = t.head;
            rels[i] = t.rel;
            tails[i] = t.tail;
        }
        ForwardCache cache;
        Mat logits = forward_batch(model, heads, rels, Mode::train, /*update_running=*/false,
                                   cache);
        double batch_loss = 0.0;
        for (int i = 0; i < b; ++i) {
            std::copy_n(logits.row(i), n_entities, row_logits.begin());
            batch_loss += loss_value_grad(config.loss, row_logits,
                                          static_cast<std::size_t>(tails[i]), row_grad);
        }
        loss_sum += batch_loss / b;
        ++n_batches;
    }
    return loss_sum / n_batches;
}

}  // namespace kkge
