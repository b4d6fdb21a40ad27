// Copyright 2026 The prosody-ddpm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prosody/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <ostream>

namespace prosody {
namespace {

// Per-dimension value pools: [class][dim] -> values.
using Pools = std::vector<std::array<std::vector<double>, 3>>;

void add_sequence(Pools& pools, const TokenSequence& tokens, const ProsodySequence& p) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto& slot = pools[tokens[i]];
        slot[0].push_back(p.pitch[i]);
        slot[1].push_back(p.energy[i]);
        slot[2].push_back(std::log(static_cast<double>(p.duration[i])));
    }
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

} // namespace

EvalReport evaluate_predictor(const ProsodyPredictor& predictor, const Corpus& corpus, const EvalOptions& options) {
    const auto test = corpus.select(Split::test);
    if (test.empty()) throw Error("evaluation needs a non-empty test split");
    if (options.n_samples == 0) throw Error("n_samples must be >= 1");

    std::size_t vocab = options.vocab;
    if (vocab == 0)
        for (const auto& u : corpus.utterances)
            for (auto t : u.tokens) vocab = std::max(vocab, t + 1);

    EvalReport report;
    report.system = predictor.name();
    report.seed = options.seed;
    report.n_samples = predictor.stochastic() ? options.n_samples : 1;
    report.test_utterances = test.size();

    // Bins come from ground truth only, train and test together.
    {
        std::array<std::vector<double>, 3> all;
        for (const auto& u : corpus.utterances) {
            const Array f = to_features(u.prosody);
            for (std::size_t r = 0; r < f.rows(); ++r)
                for (std::size_t d = 0; d < 3; ++d) all[d].push_back(f[r * 3 + d]);
        }
        for (std::size_t d = 0; d < 3; ++d) report.binning[d] = BinningSpec::covering(all[d], options.bins);
    }

    std::vector<TokenSequence> inputs;
    for (const auto* u : test) {
        for (auto t : u->tokens)
            if (t >= vocab) throw Error(fmt::format("utterance {}: token {} outside vocabulary of {}", u->id, t, vocab));
        inputs.push_back(u->tokens);
    }

    Pools truth(vocab), predicted(vocab);
    for (const auto* u : test) add_sequence(truth, u->tokens, u->prosody);
    Rng rng(options.seed);
    for (std::size_t s = 0; s < report.n_samples; ++s) {
        const auto out = predictor.predict(inputs, rng);
        if (out.size() != inputs.size()) throw Error("predictor returned the wrong number of sequences");
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (out[i].size() != inputs[i].size()) throw Error("predictor returned a sequence of the wrong length");
            add_sequence(predicted, inputs[i], out[i]);
        }
    }

    for (std::size_t d = 0; d < 3; ++d) {
        std::vector<double> p, q;
        for (std::size_t k = 0; k < vocab; ++k) {
            p.insert(p.end(), predicted[k][d].begin(), predicted[k][d].end());
            q.insert(q.end(), truth[k][d].begin(), truth[k][d].end());
        }
        report.pooled_hist[d] = {quantize(p, report.binning[d]), quantize(q, report.binning[d])};
        report.js_pooled[d] = js_divergence(report.pooled_hist[d].p, report.pooled_hist[d].q);
    }

    for (std::size_t k = 0; k < vocab; ++k) {
        if (truth[k][0].empty()) {
            report.warnings.push_back(fmt::format("token class {} absent from the test split", k));
            continue;
        }
        ClassScore cs;
        cs.token_class = k;
        cs.truth_count = truth[k][0].size();
        cs.predicted_count = predicted[k][0].size();
        for (std::size_t d = 0; d < 3; ++d) {
            cs.hist[d] = {quantize(predicted[k][d], report.binning[d]), quantize(truth[k][d], report.binning[d])};
            cs.js[d] = js_divergence(cs.hist[d].p, cs.hist[d].q);
        }
        report.per_class.push_back(std::move(cs));
    }
    for (std::size_t d = 0; d < 3; ++d) {
        double acc = 0.0;
        for (const auto& cs : report.per_class) acc += cs.js[d];
        report.js_class_mean[d] = acc / static_cast<double>(report.per_class.size());
    }

    std::vector<double> pooled_counts;
    double pooled_total = 0.0;
    for (const auto& pm : options.modes) {
        if (pm.token_class >= vocab || predicted[pm.token_class][0].empty()) continue;
        std::vector<double> centers = pm.centers;
        std::sort(centers.begin(), centers.end());
        std::vector<Mode> modes;
        for (double c : centers) modes.push_back({c, options.mode_radius * pm.spread});
        const auto& samples = predicted[pm.token_class][0];
        ModeScore ms{pm.token_class, mode_coverage(samples, modes)};
        if (pooled_counts.empty()) pooled_counts.assign(ms.occupancy.size(), 0.0);
        if (pooled_counts.size() == ms.occupancy.size()) {
            const double n = static_cast<double>(samples.size());
            for (std::size_t i = 0; i < pooled_counts.size(); ++i) pooled_counts[i] += ms.occupancy[i] * n;
            pooled_total += n;
        }
        report.modes.push_back(std::move(ms));
    }
    if (pooled_total > 0.0) {
        report.mode_pooled = pooled_counts;
        for (auto& v : report.mode_pooled) v /= pooled_total;
    }
    return report;
}

RtfResult measure_rtf(const ProsodyPredictor& predictor, const Corpus& corpus, double frame_period,
                      std::size_t max_utterances, std::uint64_t seed) {
    if (!(frame_period > 0.0)) throw Error("frame period must be positive");
    RtfResult res;
    double rtf_sum = 0.0, seconds = 0.0;
    Rng rng(seed);
    for (const auto* u : corpus.select(Split::test)) {
        if (max_utterances != 0 && res.utterances == max_utterances) break;
        long frames = 0;
        for (long d : u->prosody.duration) frames += d;
        if (frames <= 0 || u->tokens.empty()) continue;
        const std::vector<TokenSequence> one{u->tokens};
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = predictor.predict(one, rng);
        const auto t1 = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(t1 - t0).count();
        rtf_sum += elapsed / (static_cast<double>(frames) * frame_period);
        seconds += elapsed;
        ++res.utterances;
    }
    if (res.utterances == 0) throw Error("no test utterance with a positive frame count to time");
    res.rtf = rtf_sum / static_cast<double>(res.utterances);
    res.seconds_per_utterance = seconds / static_cast<double>(res.utterances);
    return res;
}

void write_report(std::ostream& out, const EvalReport& r) {
    out << "[run]\n";
    out << "system = " << r.system << "\n";
    out << "seed = " << r.seed << "\n";
    out << "n_samples = " << r.n_samples << "\n";
    out << "test_utterances = " << r.test_utterances << "\n";
    if (!r.config_hash.empty()) out << "config_hash = " << r.config_hash << "\n";
    out << "js_log_base = e\n";
    out << "\n[binning]\n";
    for (std::size_t d = 0; d < 3; ++d)
        out << kFeatureNames[d] << " = " << num(r.binning[d].lo) << " " << num(r.binning[d].hi) << " " << r.binning[d].bins
            << "\n";
    out << "\n[js_pooled]\n";
    for (std::size_t d = 0; d < 3; ++d) out << kFeatureNames[d] << " = " << num(r.js_pooled[d]) << "\n";
    out << "\n[js_class_mean]\n";
    for (std::size_t d = 0; d < 3; ++d) out << kFeatureNames[d] << " = " << num(r.js_class_mean[d]) << "\n";
    if (r.rtf) out << "\n[timing]\nrtf = " << num(*r.rtf) << "\n";
    if (!r.mode_pooled.empty()) {
        out << "\n[mode_coverage]\npooled =";
        for (double v : r.mode_pooled) out << " " << num(v);
        out << "\n";
    }

    out << "\n[per_class]\nclass\ttruth_count\tpredicted_count\tjs_pitch\tjs_energy\tjs_log_duration\n";
    for (const auto& c : r.per_class)
        out << c.token_class << "\t" << c.truth_count << "\t" << c.predicted_count << "\t" << num(c.js[0]) << "\t"
            << num(c.js[1]) << "\t" << num(c.js[2]) << "\n";
    if (!r.modes.empty()) {
        out << "\n[per_class_modes]\nclass\toccupancy (per mode, then outside)\n";
        for (const auto& m : r.modes) {
            out << m.token_class;
            for (double v : m.occupancy) out << "\t" << num(v);
            out << "\n";
        }
    }
    if (!r.warnings.empty()) {
        out << "\n[warnings]\n";
        for (const auto& w : r.warnings) out << w << "\n";
    }
}

void write_histograms(std::ostream& out, const EvalReport& r) {
    out << "support\tfeature\tbin\tlo\thi\tpredicted\ttruth\n";
    const auto dump = [&](const std::string& support, const std::array<HistogramPair, 3>& h) {
        for (std::size_t d = 0; d < 3; ++d)
            for (std::size_t b = 0; b < h[d].p.size(); ++b)
                out << support << "\t" << kFeatureNames[d] << "\t" << b << "\t" << num(r.binning[d].edge(b)) << "\t"
                    << num(r.binning[d].edge(b + 1)) << "\t" << num(h[d].p[b]) << "\t" << num(h[d].q[b]) << "\n";
    };
    dump("pooled", r.pooled_hist);
    for (const auto& c : r.per_class) dump("class" + std::to_string(c.token_class), c.hist);
}

} // namespace prosody
