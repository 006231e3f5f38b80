#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cvmask {

struct QueryRanking {
    std::string query_id;
    std::size_t rank = 1;  // 1-based position of the ground truth
};

/// Mean reciprocal rank. Throws Error{EmptyInput}, or Error{ConfigError} for rank 0.
double mrr(std::span<const QueryRanking> rankings);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct ClassificationReport {
    std::vector<ClassMetrics> per_class;
    double macro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double accuracy = 0.0;
};

/// Per-class precision/recall/F1 with 0/0 taken as 0; macro averages are
/// unweighted over all `classes`. Throws Error{LengthMismatch}, Error{UnknownLabel}.
ClassificationReport classification_metrics(std::span<const int> predicted, std::span<const int> truth,
                                             int classes);

} // namespace cvmask
