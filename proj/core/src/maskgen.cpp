#include "cvmask/maskgen.hpp"

#include "cvmask/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace cvmask {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'A', 'M', 'S', 'K'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8 + 8 + 8 + 8;

class LittleEndianWriter {
public:
    explicit LittleEndianWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(std::span<const std::uint8_t> b) {
        for (std::uint8_t c : b) out_.push_back(c);
    }

private:
    void put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t>& out_;
};

class LittleEndianReader {
public:
    explicit LittleEndianReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    [[nodiscard]] std::size_t remaining() const noexcept { return in_.size() - pos_; }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw Error(ErrorCode::FormatError, "truncated mask stream");
    }
    std::uint64_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::string_view layer_strategy_name(LayerStrategy s) noexcept {
    return s == LayerStrategy::All ? "all" : "alternate";
}

LayerStrategy parse_layer_strategy(std::string_view name) {
    if (name == "all" || name == "ALL") return LayerStrategy::All;
    if (name == "alternate" || name == "ALTERNATE") return LayerStrategy::Alternate;
    throw Error(ErrorCode::ConfigError, "unknown layer strategy '" + std::string(name) + "'");
}

void MaskConfig::validate() const {
    if (views.empty()) throw Error(ErrorCode::ConfigError, "at least one code view must be selected");
    if (!(mask_limit > 0.0 && mask_limit <= 1.0)) {
        throw Error(ErrorCode::ConfigError, "mask limit must lie in (0, 1]");
    }
}

std::string MaskConfig::canonical_json() const {
    nlohmann::json views_json = nlohmann::json::array();
    for (ViewTag t : views) views_json.push_back(view_tag_name(t));
    const nlohmann::json doc = {
        {"views", views_json},
        {"last_def", last_def},
        {"last_use", last_use},
        {"mask_limit", mask_limit},
        {"layer_strategy", layer_strategy_name(layer_strategy)},
        {"special_token_policy", "FULL"},
    };
    return doc.dump();
}

std::uint64_t MaskConfig::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_json()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double parse_mask_limit(std::string_view text) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !(value > 0.0 && value <= 1.0)) {
        throw Error(ErrorCode::ConfigError, "mask limit must be a fraction in (0, 1], got '" + std::string(text) + "'");
    }
    return value;
}

AttentionMask::AttentionMask(std::size_t n, std::vector<std::uint64_t> row_offsets,
                             std::vector<std::uint32_t> columns)
    : n_(n), offsets_(std::move(row_offsets)), columns_(std::move(columns)) {
    if (offsets_.size() != n_ + 1 || offsets_.front() != 0 || offsets_.back() != columns_.size()) {
        throw Error(ErrorCode::FormatError, "row offsets do not match the column array");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        if (offsets_[i] > offsets_[i + 1]) throw Error(ErrorCode::FormatError, "row offsets must be monotone");
        for (std::uint64_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            if (columns_[k] >= n_) throw Error(ErrorCode::FormatError, "column index out of range");
            if (k > offsets_[i] && columns_[k] <= columns_[k - 1]) {
                throw Error(ErrorCode::FormatError, "columns must be strictly increasing within a row");
            }
        }
    }
}

AttentionMask AttentionMask::all_ones(std::size_t n) {
    std::vector<std::uint64_t> offsets(n + 1);
    std::vector<std::uint32_t> columns;
    columns.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        offsets[i] = i * n;
        for (std::size_t j = 0; j < n; ++j) columns.push_back(static_cast<std::uint32_t>(j));
    }
    offsets[n] = n * n;
    return AttentionMask(n, std::move(offsets), std::move(columns));
}

AttentionMask AttentionMask::from_rows(const std::vector<std::vector<std::uint32_t>>& rows) {
    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> columns;
    for (const auto& r : rows) {
        std::vector<std::uint32_t> sorted = r;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        columns.insert(columns.end(), sorted.begin(), sorted.end());
        offsets.push_back(columns.size());
    }
    return AttentionMask(rows.size(), std::move(offsets), std::move(columns));
}

std::span<const std::uint32_t> AttentionMask::row(std::size_t i) const {
    if (i >= n_) throw Error(ErrorCode::DimensionMismatch, "row index out of range");
    return std::span<const std::uint32_t>(columns_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

bool AttentionMask::allowed(std::size_t i, std::size_t j) const {
    auto r = row(i);
    return std::binary_search(r.begin(), r.end(), static_cast<std::uint32_t>(j));
}

double AttentionMask::density() const noexcept {
    if (n_ == 0) return 1.0;
    return static_cast<double>(columns_.size()) / (static_cast<double>(n_) * static_cast<double>(n_));
}

AttentionMask attention_gen(const CodeSnippet& snippet, std::span<const StatementMask> masks) {
    const std::size_t m = snippet.statement_count();
    const std::size_t n = snippet.token_count();
    std::vector<const StatementMask*> by_seed(m, nullptr);
    for (const StatementMask& mask : masks) {
        if (mask.seed < 0 || static_cast<std::size_t>(mask.seed) >= m) {
            throw Error(ErrorCode::MaskMismatch, "mask seed " + std::to_string(mask.seed) + " is not a statement");
        }
        for (StatementId member : mask.members) {
            if (member < 0 || static_cast<std::size_t>(member) >= m) {
                throw Error(ErrorCode::MaskMismatch, "mask member " + std::to_string(member) + " is not a statement");
            }
        }
        by_seed[static_cast<std::size_t>(mask.seed)] = &mask;
    }
    for (std::size_t s = 0; s < m; ++s) {
        if (by_seed[s] == nullptr) throw Error(ErrorCode::MaskMismatch, "no mask for statement " + std::to_string(s));
    }

    std::vector<std::uint32_t> unowned;
    for (const LeafToken& t : snippet.tokens()) {
        if (t.owner == kUnowned) unowned.push_back(static_cast<std::uint32_t>(t.index));
    }

    // Rows of tokens in the same statement are identical apart from the diagonal.
    std::vector<std::vector<std::uint32_t>> statement_columns(m);
    for (std::size_t s = 0; s < m; ++s) {
        std::vector<std::uint32_t>& cols = statement_columns[s];
        for (StatementId member : by_seed[s]->members) {
            for (std::size_t tok : snippet.statements()[static_cast<std::size_t>(member)].direct_token_ids) {
                cols.push_back(static_cast<std::uint32_t>(tok));
            }
        }
        cols.insert(cols.end(), unowned.begin(), unowned.end());
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    }

    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> columns;
    for (const LeafToken& t : snippet.tokens()) {
        const auto i = static_cast<std::uint32_t>(t.index);
        if (t.owner == kUnowned) {
            for (std::uint32_t j = 0; j < n; ++j) columns.push_back(j);
        } else {
            const auto& cols = statement_columns[static_cast<std::size_t>(t.owner)];
            auto pos = std::lower_bound(cols.begin(), cols.end(), i);
            columns.insert(columns.end(), cols.begin(), pos);
            columns.push_back(i);
            columns.insert(columns.end(), (pos != cols.end() && *pos == i) ? pos + 1 : pos, cols.end());
        }
        offsets.push_back(columns.size());
    }
    return AttentionMask(n, std::move(offsets), std::move(columns));
}

AttentionMask apply_mask_limit(const AttentionMask& mask, double limit) {
    if (!(limit > 0.0 && limit <= 1.0)) throw Error(ErrorCode::ConfigError, "mask limit must lie in (0, 1]");
    if (mask.masked_fraction() <= limit) return mask;
    AttentionMask full = AttentionMask::all_ones(mask.n());
    full.set_fallback(true);
    full.set_config_digest(mask.config_digest());
    return full;
}

AttentionMask expand_subwords(const AttentionMask& mask, const SubwordMap& map) {
    if (map.counts.size() != mask.n()) {
        throw Error(ErrorCode::MapMismatch, "subword map covers " + std::to_string(map.counts.size()) +
                                                " tokens, mask has " + std::to_string(mask.n()));
    }
    if (std::any_of(map.counts.begin(), map.counts.end(), [](std::uint32_t c) { return c == 0; })) {
        throw Error(ErrorCode::MapMismatch, "every leaf token needs at least one subword piece");
    }
    std::vector<std::uint64_t> first(mask.n() + 1);
    first[0] = map.prefix_specials;
    for (std::size_t i = 0; i < mask.n(); ++i) first[i + 1] = first[i] + map.counts[i];
    const std::uint64_t total = first[mask.n()] + map.suffix_specials;
    if (total > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorCode::MapMismatch, "expanded mask too large");
    const auto out_n = static_cast<std::size_t>(total);

    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> columns;
    auto emit_full_row = [&] {
        for (std::uint32_t j = 0; j < out_n; ++j) columns.push_back(j);
        offsets.push_back(columns.size());
    };
    for (std::uint32_t p = 0; p < map.prefix_specials; ++p) emit_full_row();
    for (std::size_t i = 0; i < mask.n(); ++i) {
        std::vector<std::uint32_t> cols;
        for (std::uint32_t p = 0; p < map.prefix_specials; ++p) cols.push_back(p);
        for (std::uint32_t j : mask.row(i)) {
            for (std::uint64_t q = first[j]; q < first[j + 1]; ++q) cols.push_back(static_cast<std::uint32_t>(q));
        }
        for (std::uint64_t q = first[mask.n()]; q < total; ++q) cols.push_back(static_cast<std::uint32_t>(q));
        for (std::uint32_t piece = 0; piece < map.counts[i]; ++piece) {
            columns.insert(columns.end(), cols.begin(), cols.end());
            offsets.push_back(columns.size());
        }
    }
    for (std::uint32_t p = 0; p < map.suffix_specials; ++p) emit_full_row();
    AttentionMask out(out_n, std::move(offsets), std::move(columns));
    out.set_fallback(mask.fallback());
    out.set_config_digest(mask.config_digest());
    return out;
}

std::vector<std::uint8_t> serialize_mask(const AttentionMask& mask) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + 8 * (mask.n() + 1) + 4 * mask.nnz());
    LittleEndianWriter w(out);
    w.bytes(kMagic);
    w.u32(kMaskFormatVersion);
    w.u32(mask.fallback() ? 1U : 0U);
    w.u64(mask.n());
    w.u64(mask.nnz());
    w.f64(mask.density());
    w.u64(mask.config_digest());
    for (std::uint64_t o : mask.row_offsets()) w.u64(o);
    for (std::uint32_t c : mask.columns()) w.u32(c);
    return out;
}

void serialize_mask(const AttentionMask& mask, std::ostream& out) {
    const auto bytes = serialize_mask(mask);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AttentionMask deserialize_mask(std::span<const std::uint8_t> bytes) {
    LittleEndianReader r(bytes);
    auto magic = r.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw Error(ErrorCode::FormatError, "bad mask magic");
    const std::uint32_t version = r.u32();
    if (version != kMaskFormatVersion) {
        throw Error(ErrorCode::FormatError, "unsupported mask format version " + std::to_string(version));
    }
    const std::uint32_t flags = r.u32();
    const std::uint64_t n = r.u64();
    const std::uint64_t nnz = r.u64();
    const double density = r.f64();
    const std::uint64_t digest = r.u64();
    if (n > r.remaining() / 8 || nnz > r.remaining() / 4 || r.remaining() != 8 * (n + 1) + 4 * nnz) {
        throw Error(ErrorCode::FormatError, "mask payload size does not match header");
    }
    std::vector<std::uint64_t> offsets(static_cast<std::size_t>(n + 1));
    for (auto& o : offsets) o = r.u64();
    std::vector<std::uint32_t> columns(static_cast<std::size_t>(nnz));
    for (auto& c : columns) c = r.u32();
    AttentionMask mask(static_cast<std::size_t>(n), std::move(offsets), std::move(columns));
    if (std::bit_cast<std::uint64_t>(mask.density()) != std::bit_cast<std::uint64_t>(density)) {
        throw Error(ErrorCode::FormatError, "stored density disagrees with payload");
    }
    mask.set_fallback((flags & 1U) != 0);
    mask.set_config_digest(digest);
    return mask;
}

std::string sidecar_json(const AttentionMask& mask, const MaskConfig& config, double raw_masked_fraction) {
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(config.digest()));
    const nlohmann::json doc = {
        {"config", nlohmann::json::parse(config.canonical_json())},
        {"config_digest", digest},
        {"n", mask.n()},
        {"nnz", mask.nnz()},
        {"density", mask.density()},
        {"masked_fraction", raw_masked_fraction},
        {"effective_masked_fraction", mask.masked_fraction()},
        {"fallback", mask.fallback()},
        {"format_version", kMaskFormatVersion},
    };
    return doc.dump(2);
}

} // namespace cvmask
