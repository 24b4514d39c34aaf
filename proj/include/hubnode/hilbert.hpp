#pragma once

// Occupation-number basis of a fixed (N_up, N_down) sector of a chain with
// m_sites sites, plus creation/annihilation operator actions with fermionic
// signs.
//
// Mode ordering for sign bookkeeping: all up modes (site ascending) come
// before all down modes in the reference product state, and sign counting is
// per spin species: an operator at (site i, spin s) picks up
// (-1)^(number of occupied s-sites with index < i). Operators of different
// species commute under this convention; every sector-conserving operator
// string used downstream contains an even number of operators per species,
// for which this convention and the fully anticommuting one agree.

#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "hubnode/common.hpp"

namespace hubnode {

enum class Spin : int { Up = 0, Down = 1 };

struct FockConfig {
    std::uint32_t up_bits = 0;
    std::uint32_t down_bits = 0;

    friend bool operator==(const FockConfig&, const FockConfig&) = default;
    std::uint64_t key() const {
        return (std::uint64_t(up_bits) << 32) | std::uint64_t(down_bits);
    }
};

class FockBasis {
public:
    FockBasis(int m_sites, int n_up, int n_down)
        : m_sites_(m_sites), n_up_(n_up), n_down_(n_down) {
        if (m_sites < 1 || m_sites > 30)
            throw ParameterError("site count out of range");
        if (n_up < 0 || n_up > m_sites || n_down < 0 || n_down > m_sites)
            throw ParameterError("particle counts must satisfy 0 <= N <= m_sites");
        const auto ups = bit_patterns(m_sites, n_up);
        const auto downs = bit_patterns(m_sites, n_down);
        configs_.reserve(ups.size() * downs.size());
        for (std::uint32_t u : ups)
            for (std::uint32_t d : downs)
                configs_.push_back({u, d});
        index_.reserve(configs_.size() * 2);
        for (std::size_t i = 0; i < configs_.size(); ++i)
            index_.emplace(configs_[i].key(), static_cast<int>(i));
    }

    int m_sites() const { return m_sites_; }
    int n_up() const { return n_up_; }
    int n_down() const { return n_down_; }
    int dim() const { return static_cast<int>(configs_.size()); }
    const std::vector<FockConfig>& configs() const { return configs_; }
    const FockConfig& config(int i) const { return configs_[i]; }

    int index_of(const FockConfig& c) const {
        auto it = index_.find(c.key());
        return it == index_.end() ? -1 : it->second;
    }

private:
    // All m-bit masks with k bits set, ascending numerically (lexicographic
    // basis ordering depends on this).
    static std::vector<std::uint32_t> bit_patterns(int m, int k) {
        std::vector<std::uint32_t> out;
        if (k == 0) {
            out.push_back(0);
            return out;
        }
        std::uint32_t v = (1u << k) - 1u;
        const std::uint32_t limit = 1u << m;
        while (v < limit) {
            out.push_back(v);
            std::uint32_t t = v | (v - 1);
            v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
        }
        return out;
    }

    int m_sites_, n_up_, n_down_;
    std::vector<FockConfig> configs_;
    std::unordered_map<std::uint64_t, int> index_;
};

inline FockBasis build_basis(int m_sites, int n_up, int n_down) {
    return FockBasis(m_sites, n_up, n_down);
}

struct LadderOp {
    bool create = false;
    int site = 0;
    Spin spin = Spin::Up;
};

inline LadderOp creator(int site, Spin s) { return {true, site, s}; }
inline LadderOp annihilator(int site, Spin s) { return {false, site, s}; }

// Caches sector bases of a fixed chain so operator strings can walk between
// sectors. Immutable chain geometry; basis construction is lazy.
class SectorSpace {
public:
    explicit SectorSpace(int m_sites) : m_sites_(m_sites) {}

    int m_sites() const { return m_sites_; }

    const FockBasis& basis(int n_up, int n_down) const {
        const auto key = std::make_pair(n_up, n_down);
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(key, std::make_unique<FockBasis>(m_sites_, n_up, n_down)).first;
        return *it->second;
    }

private:
    int m_sites_;
    mutable std::map<std::pair<int, int>, std::unique_ptr<FockBasis>> cache_;
};

namespace detail {

inline int species_parity(std::uint32_t bits, int site) {
    const std::uint32_t below = bits & ((1u << site) - 1u);
    return (std::popcount(below) & 1) ? -1 : 1;
}

}  // namespace detail

// Applies a single ladder operator. `in` is over `from`; the result is over
// the sector shifted by the operator (counts outside [0, m_sites] give an
// all-zero vector in a clamped sector, signalled by returning false).
inline bool apply_ladder(const SectorSpace& space, const FockBasis& from,
                         const LadderOp& op, const VectorXc& in,
                         const FockBasis** to_out, VectorXc* out) {
    if (op.site < 0 || op.site >= space.m_sites())
        throw ParameterError("ladder operator site out of range");
    const int dn = op.create ? 1 : -1;
    int n_up = from.n_up(), n_down = from.n_down();
    (op.spin == Spin::Up ? n_up : n_down) += dn;
    if (n_up < 0 || n_up > space.m_sites() || n_down < 0 || n_down > space.m_sites()) {
        *to_out = nullptr;
        return false;
    }
    const FockBasis& to = space.basis(n_up, n_down);
    out->setZero(to.dim());
    const std::uint32_t mask = 1u << op.site;
    for (int i = 0; i < from.dim(); ++i) {
        const Complex a = in[i];
        if (a == Complex(0.0, 0.0)) continue;
        FockConfig c = from.config(i);
        std::uint32_t& bits = (op.spin == Spin::Up) ? c.up_bits : c.down_bits;
        if (op.create ? (bits & mask) : !(bits & mask)) continue;
        const int sign = detail::species_parity(bits, op.site);
        bits ^= mask;
        const int j = to.index_of(c);
        (*out)[j] += double(sign) * a;
    }
    *to_out = &to;
    return true;
}

// Applies an operator product (ops[0] leftmost, so ops.back() acts first) to
// a vector over `basis`. Returns the resulting vector over the basis named in
// `*to_out`; a walk through an invalid sector yields the zero vector over the
// initial basis.
inline VectorXc apply_string(const SectorSpace& space, const FockBasis& basis,
                             const std::vector<LadderOp>& ops, const VectorXc& in,
                             const FockBasis** to_out) {
    const FockBasis* cur = &basis;
    VectorXc v = in;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        const FockBasis* next = nullptr;
        VectorXc w;
        if (!apply_ladder(space, *cur, *it, v, &next, &w)) {
            if (to_out) *to_out = &basis;
            return VectorXc::Zero(basis.dim());
        }
        cur = next;
        v.swap(w);
    }
    if (to_out) *to_out = cur;
    return v;
}

// Sector-conserving operator string applied within one basis. Strings that
// change the sector map to the zero vector.
inline VectorXc apply_pair(const SectorSpace& space, const FockBasis& basis,
                           const std::vector<LadderOp>& ops, const VectorXc& in) {
    const FockBasis* to = nullptr;
    VectorXc v = apply_string(space, basis, ops, in, &to);
    if (to->n_up() != basis.n_up() || to->n_down() != basis.n_down())
        return VectorXc::Zero(basis.dim());
    return v;
}

}  // namespace hubnode
