#pragma once

// Token-level attention masks built from statement masks, stored in
// compressed-sparse-row form.

#include "cvmask/backslice.hpp"
#include "cvmask/codeviews.hpp"
#include "cvmask/syntax_frontend.hpp"

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cvmask {

enum class LayerStrategy : std::uint8_t { All, Alternate };
enum class SpecialTokenPolicy : std::uint8_t { Full };

std::string_view layer_strategy_name(LayerStrategy s) noexcept;
LayerStrategy parse_layer_strategy(std::string_view name);

struct MaskConfig {
    std::set<ViewTag> views{ViewTag::Dfg};
    bool last_def = false;
    bool last_use = false;
    double mask_limit = 0.9;
    LayerStrategy layer_strategy = LayerStrategy::All;
    SpecialTokenPolicy special_token_policy = SpecialTokenPolicy::Full;

    /// Throws Error{ConfigError} on an empty view set or a limit outside (0, 1].
    void validate() const;
    [[nodiscard]] ViewSelection selection() const { return {views, {last_def, last_use}}; }
    /// Canonical JSON (sorted keys, fixed formatting).
    [[nodiscard]] std::string canonical_json() const;
    /// 64-bit FNV-1a of canonical_json().
    [[nodiscard]] std::uint64_t digest() const;
};

/// Parses "0.7", "0.8", "0.9" or any fraction in (0, 1]; throws Error{ConfigError}.
double parse_mask_limit(std::string_view text);

/// Boolean N x N matrix in CSR form with sorted, unique column indices per row.
class AttentionMask {
public:
    AttentionMask() = default;
    /// Throws Error{FormatError} if the CSR arrays are inconsistent.
    AttentionMask(std::size_t n, std::vector<std::uint64_t> row_offsets, std::vector<std::uint32_t> columns);

    static AttentionMask all_ones(std::size_t n);
    static AttentionMask from_rows(const std::vector<std::vector<std::uint32_t>>& rows);

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return columns_.size(); }
    [[nodiscard]] std::span<const std::uint32_t> row(std::size_t i) const;
    [[nodiscard]] bool allowed(std::size_t i, std::size_t j) const;
    [[nodiscard]] const std::vector<std::uint64_t>& row_offsets() const noexcept { return offsets_; }
    [[nodiscard]] const std::vector<std::uint32_t>& columns() const noexcept { return columns_; }
    [[nodiscard]] double density() const noexcept;
    [[nodiscard]] double masked_fraction() const noexcept { return 1.0 - density(); }

    [[nodiscard]] bool fallback() const noexcept { return fallback_; }
    [[nodiscard]] std::uint64_t config_digest() const noexcept { return config_digest_; }
    void set_fallback(bool value) noexcept { fallback_ = value; }
    void set_config_digest(std::uint64_t value) noexcept { config_digest_ = value; }

    friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> offsets_{0};
    std::vector<std::uint32_t> columns_;
    bool fallback_ = false;
    std::uint64_t config_digest_ = 0;
};

/// Subword piece counts per leaf token, plus special positions around them.
struct SubwordMap {
    std::vector<std::uint32_t> counts;
    std::uint32_t prefix_specials = 0;
    std::uint32_t suffix_specials = 0;
};

/// A'(i,j) = 1 iff tok_j belongs to a statement in the mask of tok_i's
/// statement. Diagonal forced; unowned tokens get full rows and columns.
/// Throws Error{MaskMismatch}.
AttentionMask attention_gen(const CodeSnippet& snippet, std::span<const StatementMask> masks);

/// All-ones mask (with the fallback flag set) when masked_fraction > limit.
AttentionMask apply_mask_limit(const AttentionMask& mask, double limit);

/// Each allowed (i,j) becomes the block of i's pieces x j's pieces; special
/// positions get full rows and columns. Throws Error{MapMismatch}.
AttentionMask expand_subwords(const AttentionMask& mask, const SubwordMap& map);

inline constexpr std::uint32_t kMaskFormatVersion = 1;

/// Little-endian CSR layout:
///   "AMSK" | u32 version | u32 flags | u64 n | u64 nnz | f64 density |
///   u64 config digest | u64[n+1] row offsets | u32[nnz] column indices
/// flags bit 0 marks the limit fallback.
std::vector<std::uint8_t> serialize_mask(const AttentionMask& mask);
void serialize_mask(const AttentionMask& mask, std::ostream& out);
/// Throws Error{FormatError} on malformed input.
AttentionMask deserialize_mask(std::span<const std::uint8_t> bytes);

/// Audit record stored next to a serialized mask.
std::string sidecar_json(const AttentionMask& mask, const MaskConfig& config, double raw_masked_fraction);

} // namespace cvmask
