#pragma once

#include <cmath>

namespace headlab {

// Neumaier compensated sum. Partial sums from different shards can be merged
// and still agree with the serial result far below 1e-9 relative.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Running mean / sample variance accumulator (compensated).
class MeanAccumulator {
 public:
  void add(double x) {
    sum_.add(x);
    sq_.add(x * x);
    ++count_;
  }
  void merge(const MeanAccumulator& other) {
    sum_.merge(other.sum_);
    sq_.merge(other.sq_);
    count_ += other.count_;
  }
  std::size_t count() const { return count_; }
  double mean() const { return count_ == 0 ? 0.0 : sum_.value() / static_cast<double>(count_); }
  /// Sample standard deviation (n - 1 denominator); 0 when count < 2.
  double stddev() const {
    if (count_ < 2) return 0.0;
    const double n = static_cast<double>(count_);
    const double m = sum_.value() / n;
    const double var = (sq_.value() - n * m * m) / (n - 1.0);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  }
  double stderr_of_mean() const {
    return count_ < 2 ? 0.0 : stddev() / std::sqrt(static_cast<double>(count_));
  }

 private:
  CompensatedSum sum_;
  CompensatedSum sq_;
  std::size_t count_ = 0;
};

}  // namespace headlab
