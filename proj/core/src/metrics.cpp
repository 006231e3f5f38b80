#include "cvmask/metrics.hpp"

#include "cvmask/error.hpp"

namespace cvmask {

double mrr(std::span<const QueryRanking> rankings) {
    if (rankings.empty()) throw Error(ErrorCode::EmptyInput, "MRR of an empty query set");
    double total = 0.0;
    for (const QueryRanking& r : rankings) {
        if (r.rank < 1) throw Error(ErrorCode::ConfigError, "rank must be >= 1 for query '" + r.query_id + "'");
        total += 1.0 / static_cast<double>(r.rank);
    }
    return total / static_cast<double>(rankings.size());
}

ClassificationReport classification_metrics(std::span<const int> predicted, std::span<const int> truth,
                                             int classes) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(predicted.size()) + " predictions for " +
                                                   std::to_string(truth.size()) + " labels");
    }
    if (classes < 1) throw Error(ErrorCode::ConfigError, "need at least one class");
    const auto k = static_cast<std::size_t>(classes);
    std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int p = predicted[i];
        const int t = truth[i];
        if (p < 0 || p >= classes || t < 0 || t >= classes) {
            throw Error(ErrorCode::UnknownLabel, "label outside [0, " + std::to_string(classes) + ") at index " +
                                                     std::to_string(i));
        }
        if (p == t) {
            ++tp[static_cast<std::size_t>(p)];
            ++correct;
        } else {
            ++fp[static_cast<std::size_t>(p)];
            ++fn[static_cast<std::size_t>(t)];
        }
    }

    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    ClassificationReport report;
    for (std::size_t c = 0; c < k; ++c) {
        ClassMetrics m;
        m.precision = ratio(tp[c], tp[c] + fp[c]);
        m.recall = ratio(tp[c], tp[c] + fn[c]);
        m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        m.support = tp[c] + fn[c];
        report.macro_f1 += m.f1;
        report.macro_precision += m.precision;
        report.macro_recall += m.recall;
        report.per_class.push_back(m);
    }
    report.macro_f1 /= static_cast<double>(k);
    report.macro_precision /= static_cast<double>(k);
    report.macro_recall /= static_cast<double>(k);
    report.accuracy = ratio(correct, truth.size());
    return report;
}

} // namespace cvmask
