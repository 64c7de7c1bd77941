#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace smilegrid {

// A cumulative probability model P(x) with hints for where the distribution
// effectively starts and ends.
class CdfModel {
public:
    virtual ~CdfModel() = default;
    virtual double cdf(double x) const = 0;
    virtual double support_lo() const = 0; // x with P(x) ~ 0
    virtual double support_hi() const = 0; // x with P(x) ~ 1
};

class UniformCdf final : public CdfModel {
public:
    UniformCdf(double lo, double hi);
    double cdf(double x) const override;
    double support_lo() const override { return lo_; }
    double support_hi() const override { return hi_; }

private:
    double lo_, hi_;
};

class NormalCdf final : public CdfModel {
public:
    NormalCdf(double mean, double stddev);
    double cdf(double x) const override;
    double support_lo() const override { return mean_ - 9.0 * sd_; }
    double support_hi() const override { return mean_ + 9.0 * sd_; }

private:
    double mean_, sd_;
};

class LognormalCdf final : public CdfModel {
public:
    LognormalCdf(double log_mean, double log_stddev);
    double cdf(double x) const override;
    double support_lo() const override;
    double support_hi() const override;

private:
    double mu_, sigma_;
};

enum class Builder { FS, CPU1, CPU2, DS1, DS2, DS3 };

const char* builder_name(Builder b);
std::optional<Builder> builder_from_name(const std::string& name);

struct TableBuildConfig {
    int n_initial = 500;
    double x_s = 0.0;
    double x_f = 0.0;
    std::optional<double> zeta_cap;
    std::size_t max_table_size = std::size_t{1} << 20;
    int workers = 1;

    void validate() const;
};

struct BuildStats {
    std::uint64_t model_evals = 0;
    int passes = 0;           // DS3 whole-table refinement passes
    int first_pass_zones = 0; // error zones located in the first DS3 pass
};

// Paired monotone arrays x-bar / P-bar with the build metadata.
struct LookupTable {
    std::vector<double> xs;
    std::vector<double> ps;
    double x_s = 0.0;
    double x_f = 0.0;
    std::optional<double> zeta_cap;
    Builder built_by = Builder::FS;
    BuildStats stats;

    std::size_t size() const { return xs.size(); }
    void validate() const;
};

// Contiguous run of midpoint errors above the cap; indexes into the error
// array, inclusive on both ends.
struct ErrorZone {
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;
};

std::vector<ErrorZone> find_error_zones(const std::vector<double>& zeta, double cap);

// Mid-point interpolation errors; element i compares the model CDF at the
// cell midpoint with the linearly interpolated table value.
std::vector<double> midpoint_errors(const LookupTable& table, const CdfModel& model,
                                    int workers = 1);

// Inverse transform: binary search for the bracketing pair, then linear
// interpolation. Exact at stored nodes.
double inverse_lookup(const LookupTable& table, double p);

LookupTable build_fixed(const CdfModel& model, const TableBuildConfig& cfg);
LookupTable build_cpu1(const CdfModel& model, const TableBuildConfig& cfg);
LookupTable build_cpu2(const CdfModel& model, const TableBuildConfig& cfg);
LookupTable build_ds(const CdfModel& model, const TableBuildConfig& cfg, Builder variant);

// Dispatch on the builder tag.
LookupTable build_table(const CdfModel& model, const TableBuildConfig& cfg, Builder builder);

void save_table_binary(const LookupTable& table, const std::string& path);
LookupTable load_table_binary(const std::string& path);
void save_table_csv(const LookupTable& table, const std::string& path);
LookupTable load_table_csv(const std::string& path);

} // namespace smilegrid
