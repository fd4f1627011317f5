#pragma once

#include <cstddef>
#include <vector>

#include "oretrack/core/errors.hpp"

namespace oretrack {

// One grid cell of the ore-body model along the bench axis. The running
// accumulators implement the reconciliation weighted average incrementally:
//   G_i = (alpha0 * G0 + sum alpha(t) G(t)) / (alpha0 + sum alpha(t))
struct Block {
    std::size_t index = 0;
    double centre_x = 0.0;   // m
    double extent = 0.0;     // m
    double total_mass = 0.0;  // m_i^0, kg
    double prior_grindability = 0.0;   // G_i^0
    double prior_confidence = 0.0;     // alpha_i^0
    double acc_num = 0.0;  // running sum of alpha(t) * G(t)
    double acc_den = 0.0;  // running sum of alpha(t)

    double reconciled() const {
        const double den = prior_confidence + acc_den;
        if (den <= 0.0) return prior_grindability;
        return (prior_confidence * prior_grindability + acc_num) / den;
    }
};

// Contiguous 1D block model over a source bench. Blocks tile [x0, x0+n*size)
// without overlap.
class BlockModel {
  public:
    BlockModel() = default;
    BlockModel(double x0, double block_size, std::size_t count, double block_mass,
               double prior_g, double prior_alpha)
        : x0_(x0), size_(block_size) {
        if (!(block_size > 0.0)) throw invalid_argument("BlockModel: block size must be > 0");
        blocks_.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            blocks_[i].index = i;
            blocks_[i].centre_x = x0 + (static_cast<double>(i) + 0.5) * block_size;
            blocks_[i].extent = block_size;
            blocks_[i].total_mass = block_mass;
            blocks_[i].prior_grindability = prior_g;
            blocks_[i].prior_confidence = prior_alpha;
        }
    }

    std::size_t size() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }
    Block& at(std::size_t i) {
        if (i >= blocks_.size()) throw not_found("BlockModel: unknown block index");
        return blocks_[i];
    }
    const Block& at(std::size_t i) const {
        if (i >= blocks_.size()) throw not_found("BlockModel: unknown block index");
        return blocks_[i];
    }
    std::vector<Block>& blocks() { return blocks_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    // Block containing bench coordinate x, or npos when outside the model.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t block_of(double x) const {
        if (blocks_.empty() || x < x0_) return npos;
        const auto i = static_cast<std::size_t>((x - x0_) / size_);
        return i < blocks_.size() ? i : npos;
    }

    double x0() const { return x0_; }
    double block_size() const { return size_; }

    // One reconciliation observation: grindability g observed while the mill
    // holds mass_from_block (kg) out of mill_mass (kg) total.
    void observe(std::size_t block, double g, double mass_from_block, double mill_mass) {
        Block& b = at(block);
        if (b.total_mass <= 0.0 || mill_mass <= 0.0 || mass_from_block <= 0.0) return;
        const double alpha = mass_from_block * mass_from_block / (b.total_mass * mill_mass);
        b.acc_num += alpha * g;
        b.acc_den += alpha;
    }

  private:
    double x0_ = 0.0;
    double size_ = 1.0;
    std::vector<Block> blocks_;
};

}  // namespace oretrack
