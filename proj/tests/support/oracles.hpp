#pragma once

// Independent reference implementations used to cross-check the library.
// They favour obviousness over speed and share no code with core/.

#include "cvmask/backslice.hpp"
#include "cvmask/codeviews.hpp"
#include "cvmask/maskgen.hpp"
#include "cvmask/syntax_frontend.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using cvmask::Definition;

struct NaiveRda {
    std::vector<std::set<Definition>> in;
    std::vector<std::set<Definition>> out;
};

/// Round-robin iteration of IN = U OUT(pred), OUT = gen U (IN - kill) from
/// empty sets until nothing changes.
NaiveRda naive_rda(const std::vector<std::set<std::string>>& gen, const cvmask::CodeViewGraph& cfg);

/// Forward reachability over reversed edges by repeated relaxation, then
/// drop holders.
std::set<cvmask::StatementId> brute_backslice(cvmask::StatementId seed, const cvmask::CodeViewGraph& view,
                                              std::size_t statement_count);

/// Dense N x N mask from its definition, evaluated cell by cell.
std::vector<std::vector<bool>> literal_mask(const cvmask::CodeSnippet& snippet,
                                           const std::vector<cvmask::StatementMask>& masks);

bool same_as_dense(const cvmask::AttentionMask& mask, const std::vector<std::vector<bool>>& dense);

double mrr(const std::vector<std::size_t>& ranks);
double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int classes);

/// Random straight-line and structured Java statements.
struct SnippetShape {
    std::size_t max_tokens = 30;
    std::size_t max_statements = 12;
    bool control_flow = true;
};
std::string random_snippet(std::mt19937_64& rng, const SnippetShape& shape);

/// Deterministic desk corpus: `records` JSONL lines of small Java methods.
/// `broken_at` (1-based, 0 = none) replaces that line with malformed JSON.
std::string desk_corpus(std::size_t records, std::size_t broken_at = 0);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
std::string read_fixture(const std::string& name);

}  // namespace oracle
