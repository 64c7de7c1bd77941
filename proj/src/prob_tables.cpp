#include "smilegrid/prob_tables.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "smilegrid/errors.hpp"
#include "smilegrid/normal.hpp"
#include "smilegrid/parallel.hpp"

namespace smilegrid {

UniformCdf::UniformCdf(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw validation_error("uniform model needs lo < hi");
}

double UniformCdf::cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    return (x - lo_) / (hi_ - lo_);
}

NormalCdf::NormalCdf(double mean, double stddev) : mean_(mean), sd_(stddev) {
    if (!(stddev > 0.0)) throw validation_error("normal model needs a positive stddev");
}

double NormalCdf::cdf(double x) const { return normal_cdf((x - mean_) / sd_); }

LognormalCdf::LognormalCdf(double log_mean, double log_stddev)
    : mu_(log_mean), sigma_(log_stddev) {
    if (!(log_stddev > 0.0)) throw validation_error("lognormal model needs a positive log stddev");
}

double LognormalCdf::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    return normal_cdf((std::log(x) - mu_) / sigma_);
}

double LognormalCdf::support_lo() const { return std::exp(mu_ - 9.0 * sigma_); }
double LognormalCdf::support_hi() const { return std::exp(mu_ + 9.0 * sigma_); }

const char* builder_name(Builder b) {
    switch (b) {
    case Builder::FS: return "FS";
    case Builder::CPU1: return "CPU1";
    case Builder::CPU2: return "CPU2";
    case Builder::DS1: return "DS1";
    case Builder::DS2: return "DS2";
    case Builder::DS3: return "DS3";
    }
    return "?";
}

std::optional<Builder> builder_from_name(const std::string& name) {
    for (Builder b : {Builder::FS, Builder::CPU1, Builder::CPU2, Builder::DS1, Builder::DS2,
                      Builder::DS3})
        if (name == builder_name(b)) return b;
    return std::nullopt;
}

void TableBuildConfig::validate() const {
    if (n_initial < 2) throw validation_error("n_initial must be at least 2");
    if (!(x_s < x_f)) throw validation_error("need x_s < x_f");
    if (zeta_cap && !(*zeta_cap > 0.0)) throw validation_error("zeta_cap must be positive");
    if (max_table_size < static_cast<std::size_t>(n_initial))
        throw validation_error("max_table_size below the initial grid size");
}

void LookupTable::validate() const {
    if (xs.size() != ps.size() || xs.size() < 2) throw validation_error("malformed lookup table");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if (!(xs[i] < xs[i + 1])) throw validation_error("table xs not strictly increasing");
        if (ps[i] > ps[i + 1]) throw validation_error("table ps not non-decreasing");
    }
    for (double p : ps)
        if (!(p >= 0.0 && p <= 1.0)) throw validation_error("table ps outside [0, 1]");
}

std::vector<ErrorZone> find_error_zones(const std::vector<double>& zeta, double cap) {
    std::vector<ErrorZone> zones;
    std::size_t i = 0;
    while (i < zeta.size()) {
        if (zeta[i] > cap) {
            ErrorZone z{i, i};
            while (z.end_idx + 1 < zeta.size() && zeta[z.end_idx + 1] > cap) ++z.end_idx;
            zones.push_back(z);
            i = z.end_idx + 1;
        } else {
            ++i;
        }
    }
    return zones;
}

std::vector<double> midpoint_errors(const LookupTable& table, const CdfModel& model, int workers) {
    if (table.size() < 2) throw validation_error("table too small for midpoint errors");
    std::vector<double> zeta(table.size() - 1);
    parallel_for(zeta.size(), workers, [&](std::size_t i) {
        const double mid = 0.5 * (table.xs[i] + table.xs[i + 1]);
        zeta[i] = std::abs(model.cdf(mid) - 0.5 * (table.ps[i] + table.ps[i + 1]));
    });
    return zeta;
}

double inverse_lookup(const LookupTable& table, double p) {
    const auto& ps = table.ps;
    const auto& xs = table.xs;
    if (!(p >= ps.front() && p <= ps.back()))
        throw validation_error("probability outside the tabulated range");
    const auto it = std::lower_bound(ps.begin(), ps.end(), p);
    if (it != ps.end() && *it == p) return xs[static_cast<std::size_t>(it - ps.begin())];
    const std::size_t b = static_cast<std::size_t>(it - ps.begin());
    const std::size_t a = b - 1;
    return xs[a] + (xs[b] - xs[a]) / (ps[b] - ps[a]) * (p - ps[a]);
}

namespace {

// Exact dyadic position index: value = num / 2^level grid steps from x_s.
// All builder point placements live on this lattice, which keeps point
// coordinates independent of the construction order.
struct Dyadic {
    std::int64_t num = 0;
    int level = 0;

    void normalize() {
        while (level > 0 && (num & 1) == 0) {
            num >>= 1;
            --level;
        }
    }
};

Dyadic dyadic_add(Dyadic a, Dyadic b) {
    const int level = std::max(a.level, b.level);
    Dyadic r{(a.num << (level - a.level)) + (b.num << (level - b.level)), level};
    r.normalize();
    return r;
}

Dyadic dyadic_midpoint(Dyadic a, Dyadic b) {
    const int level = std::max(a.level, b.level) + 1;
    if (level > 60) throw table_error("refinement depth exceeded");
    Dyadic r{(a.num << (level - a.level - 1)) + (b.num << (level - b.level - 1)), level};
    r.normalize();
    return r;
}

// a < b as rationals.
bool dyadic_less(Dyadic a, Dyadic b) {
    const int level = std::max(a.level, b.level);
    return (a.num << (level - a.level)) < (b.num << (level - b.level));
}

// Wraps a model with an evaluation counter shared across workers.
class CountingCdf {
public:
    explicit CountingCdf(const CdfModel& model) : model_(model) {}
    double operator()(double x) const {
        count_.fetch_add(1, std::memory_order_relaxed);
        return model_.cdf(x);
    }
    std::uint64_t count() const { return count_.load(); }

private:
    const CdfModel& model_;
    mutable std::atomic<std::uint64_t> count_{0};
};

struct BuilderContext {
    const TableBuildConfig& cfg;
    CountingCdf eval;
    double dx;
    std::int64_t last_index; // n_initial - 1; position of x_f on the lattice

    BuilderContext(const CdfModel& model, const TableBuildConfig& cfg_)
        : cfg(cfg_), eval(model), dx((cfg_.x_f - cfg_.x_s) / (cfg_.n_initial - 1)),
          last_index(cfg_.n_initial - 1) {}

    double x_at(Dyadic d) const {
        if (d.level == 0 && d.num == last_index) return cfg.x_f;
        return cfg.x_s + std::ldexp(static_cast<double>(d.num) * dx, -d.level);
    }
};

// Midpoint error of the cell [i, i+1] from the stored doubles; matches
// midpoint_errors exactly so the post-build sweep sees the same values.
double cell_zeta(const std::vector<double>& xs, const std::vector<double>& ps, std::size_t i,
                 const CountingCdf& eval) {
    const double mid = 0.5 * (xs[i] + xs[i + 1]);
    return std::abs(eval(mid) - 0.5 * (ps[i] + ps[i + 1]));
}

LookupTable finish(std::vector<double>&& xs, std::vector<double>&& ps, const BuilderContext& ctx,
                   Builder tag) {
    LookupTable t;
    t.xs = std::move(xs);
    t.ps = std::move(ps);
    t.x_s = ctx.cfg.x_s;
    t.x_f = ctx.cfg.x_f;
    t.zeta_cap = ctx.cfg.zeta_cap;
    t.built_by = tag;
    t.stats.model_evals = ctx.eval.count();
    return t;
}

LookupTable fixed_grid(BuilderContext& ctx, Builder tag) {
    const std::size_t n = static_cast<std::size_t>(ctx.cfg.n_initial);
    std::vector<double> xs(n), ps(n);
    parallel_for(n, ctx.cfg.workers, [&](std::size_t i) {
        xs[i] = ctx.x_at(Dyadic{static_cast<std::int64_t>(i), 0});
        ps[i] = ctx.eval(xs[i]);
    });
    return finish(std::move(xs), std::move(ps), ctx, tag);
}

// Shared CPU1/CPU2 sequential construction. CPU1 resets the increment to dx
// after a refinement burst; CPU2 recovers it by doubling.
LookupTable sequential_build(const CdfModel& model, const TableBuildConfig& cfg, bool doubling,
                             Builder tag) {
    cfg.validate();
    BuilderContext ctx(model, cfg);
    if (!cfg.zeta_cap) return fixed_grid(ctx, tag);
    const double cap = *cfg.zeta_cap;

    std::vector<double> xs, ps;
    xs.reserve(8 * cfg.n_initial);
    ps.reserve(8 * cfg.n_initial);

    Dyadic pos{0, 0};
    xs.push_back(ctx.x_at(pos));
    ps.push_back(ctx.eval(xs.back()));

    int inc_level = 0; // increment = dx / 2^inc_level
    const Dyadic end{ctx.last_index, 0};
    while (dyadic_less(pos, end)) {
        if (doubling && inc_level > 0) --inc_level; // recover: at most the original dx
        if (!doubling) inc_level = 0;               // revert to the original dx
        Dyadic cand = dyadic_add(pos, Dyadic{1, inc_level});
        double x = ctx.x_at(cand);
        double p = ctx.eval(x);
        xs.push_back(x);
        ps.push_back(p);
        while (cell_zeta(xs, ps, xs.size() - 2, ctx.eval) > cap) {
            // Discard the candidate pair and retry at half the increment.
            if (++inc_level > 60) throw table_error("refinement depth exceeded");
            xs.pop_back();
            ps.pop_back();
            cand = dyadic_add(pos, Dyadic{1, inc_level});
            x = ctx.x_at(cand);
            p = ctx.eval(x);
            xs.push_back(x);
            ps.push_back(p);
        }
        pos = cand;
        if (xs.size() > cfg.max_table_size)
            throw table_error("table grew past max_table_size; raise the cap or the budget");
    }
    return finish(std::move(xs), std::move(ps), ctx, tag);
}

} // namespace

LookupTable build_fixed(const CdfModel& model, const TableBuildConfig& cfg) {
    cfg.validate();
    BuilderContext ctx(model, cfg);
    return fixed_grid(ctx, Builder::FS);
}

LookupTable build_cpu1(const CdfModel& model, const TableBuildConfig& cfg) {
    return sequential_build(model, cfg, false, Builder::CPU1);
}

LookupTable build_cpu2(const CdfModel& model, const TableBuildConfig& cfg) {
    return sequential_build(model, cfg, true, Builder::CPU2);
}

namespace {

struct DsState {
    std::vector<double> xs, ps, zeta;
    std::vector<Dyadic> pos;
};

// Open `gap` slots at `at` in a vector, shifting the tail right. `parallel`
// routes the move through parallel workers (DS2/DS3); the resulting contents
// are identical either way.
template <typename T>
void shift_tail(std::vector<T>& v, std::size_t at, std::size_t gap, int workers, bool parallel) {
    const std::size_t old_size = v.size();
    v.resize(old_size + gap);
    const std::size_t tail = old_size - at;
    if (parallel && workers > 1 && tail > 1) {
        std::vector<T> tmp(v.begin() + at, v.begin() + old_size);
        parallel_for(tail, workers, [&](std::size_t k) { v[at + gap + k] = tmp[k]; });
    } else {
        std::copy_backward(v.begin() + at, v.begin() + old_size, v.end());
    }
}

LookupTable ds_single_insert(const CdfModel& model, const TableBuildConfig& cfg, bool parallel_shift,
                             Builder tag) {
    cfg.validate();
    BuilderContext ctx(model, cfg);
    if (!cfg.zeta_cap) return fixed_grid(ctx, tag);
    const double cap = *cfg.zeta_cap;

    LookupTable base = fixed_grid(ctx, tag);
    DsState st;
    st.xs = std::move(base.xs);
    st.ps = std::move(base.ps);
    st.xs.reserve(8 * cfg.n_initial);
    st.ps.reserve(8 * cfg.n_initial);
    st.pos.reserve(8 * cfg.n_initial);
    for (std::int64_t i = 0; i < cfg.n_initial; ++i) st.pos.push_back(Dyadic{i, 0});

    st.zeta.resize(st.xs.size() - 1);
    parallel_for(st.zeta.size(), cfg.workers,
                 [&](std::size_t i) { st.zeta[i] = cell_zeta(st.xs, st.ps, i, ctx.eval); });

    std::size_t i = 0;
    while (i < st.zeta.size()) {
        if (!(st.zeta[i] > cap)) {
            ++i;
            continue;
        }
        if (st.xs.size() + 1 > cfg.max_table_size)
            throw table_error("table grew past max_table_size; raise the cap or the budget");
        const Dyadic mid = dyadic_midpoint(st.pos[i], st.pos[i + 1]);
        shift_tail(st.xs, i + 1, 1, cfg.workers, parallel_shift);
        shift_tail(st.ps, i + 1, 1, cfg.workers, parallel_shift);
        shift_tail(st.pos, i + 1, 1, cfg.workers, parallel_shift);
        shift_tail(st.zeta, i + 1, 1, cfg.workers, parallel_shift);
        st.pos[i + 1] = mid;
        st.xs[i + 1] = ctx.x_at(mid);
        st.ps[i + 1] = ctx.eval(st.xs[i + 1]);
        st.zeta[i] = cell_zeta(st.xs, st.ps, i, ctx.eval);
        st.zeta[i + 1] = cell_zeta(st.xs, st.ps, i + 1, ctx.eval);
        // The halted counter stays on i until its cell passes.
    }
    return finish(std::move(st.xs), std::move(st.ps), ctx, tag);
}

LookupTable ds_zones(const CdfModel& model, const TableBuildConfig& cfg) {
    cfg.validate();
    BuilderContext ctx(model, cfg);
    if (!cfg.zeta_cap) return fixed_grid(ctx, Builder::DS3);
    const double cap = *cfg.zeta_cap;

    LookupTable base = fixed_grid(ctx, Builder::DS3);
    DsState st;
    st.xs = std::move(base.xs);
    st.ps = std::move(base.ps);
    st.xs.reserve(8 * cfg.n_initial);
    st.ps.reserve(8 * cfg.n_initial);
    st.pos.reserve(8 * cfg.n_initial);
    for (std::int64_t i = 0; i < cfg.n_initial; ++i) st.pos.push_back(Dyadic{i, 0});

    st.zeta.resize(st.xs.size() - 1);
    parallel_for(st.zeta.size(), cfg.workers,
                 [&](std::size_t i) { st.zeta[i] = cell_zeta(st.xs, st.ps, i, ctx.eval); });

    int passes = 0;
    int first_pass_zones = 0;
    for (;;) {
        const std::vector<ErrorZone> zones = find_error_zones(st.zeta, cap);
        if (zones.empty()) break;
        ++passes;
        if (passes == 1) first_pass_zones = static_cast<int>(zones.size());

        std::size_t extra = 0;
        for (const ErrorZone& z : zones) extra += z.end_idx - z.start_idx + 1;
        if (st.xs.size() + extra > cfg.max_table_size)
            throw table_error("table grew past max_table_size; raise the cap or the budget");

        // Right to left so pending zone indices stay valid across shifts.
        for (auto zi = zones.rbegin(); zi != zones.rend(); ++zi) {
            const std::size_t s = zi->start_idx;
            const std::size_t cells = zi->end_idx - zi->start_idx + 1;
            // Each cell is bisected: points s..s+cells plus `cells` midpoints.
            shift_tail(st.xs, s + 1, cells, cfg.workers, true);
            shift_tail(st.ps, s + 1, cells, cfg.workers, true);
            shift_tail(st.pos, s + 1, cells, cfg.workers, true);
            shift_tail(st.zeta, s + 1, cells, cfg.workers, true);

            // Spread the zone's old points to every second slot. Ascending
            // order: each destination lies strictly left of every source
            // still to be read.
            for (std::size_t k = 1; k < cells; ++k) {
                st.pos[s + 2 * k] = st.pos[s + cells + k];
                st.xs[s + 2 * k] = st.xs[s + cells + k];
                st.ps[s + 2 * k] = st.ps[s + cells + k];
            }
            parallel_for(cells, cfg.workers, [&](std::size_t k) {
                const Dyadic mid = dyadic_midpoint(st.pos[s + 2 * k], st.pos[s + 2 * k + 2]);
                st.pos[s + 2 * k + 1] = mid;
                st.xs[s + 2 * k + 1] = ctx.x_at(mid);
                st.ps[s + 2 * k + 1] = ctx.eval(st.xs[s + 2 * k + 1]);
            });
            parallel_for(2 * cells, cfg.workers, [&](std::size_t k) {
                st.zeta[s + k] = cell_zeta(st.xs, st.ps, s + k, ctx.eval);
            });
        }
    }
    LookupTable t = finish(std::move(st.xs), std::move(st.ps), ctx, Builder::DS3);
    t.stats.passes = passes;
    t.stats.first_pass_zones = first_pass_zones;
    return t;
}

} // namespace

LookupTable build_ds(const CdfModel& model, const TableBuildConfig& cfg, Builder variant) {
    switch (variant) {
    case Builder::DS1: return ds_single_insert(model, cfg, false, Builder::DS1);
    case Builder::DS2: return ds_single_insert(model, cfg, true, Builder::DS2);
    case Builder::DS3: return ds_zones(model, cfg);
    default: throw validation_error("build_ds expects DS1, DS2 or DS3");
    }
}

LookupTable build_table(const CdfModel& model, const TableBuildConfig& cfg, Builder builder) {
    switch (builder) {
    case Builder::FS: return build_fixed(model, cfg);
    case Builder::CPU1: return build_cpu1(model, cfg);
    case Builder::CPU2: return build_cpu2(model, cfg);
    default: return build_ds(model, cfg, builder);
    }
}

namespace {

constexpr char kMagic[4] = {'S', 'G', 'L', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

} // namespace

void save_table_binary(const LookupTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open " + path + " for writing");
    out.write(kMagic, 4);
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<std::uint64_t>(table.size()));
    write_pod(out, table.x_s);
    write_pod(out, table.x_f);
    const std::uint8_t has_cap = table.zeta_cap ? 1 : 0;
    write_pod(out, has_cap);
    write_pod(out, table.zeta_cap.value_or(0.0));
    write_pod(out, static_cast<std::uint32_t>(table.built_by));
    out.write(reinterpret_cast<const char*>(table.xs.data()),
              static_cast<std::streamsize>(table.xs.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(table.ps.data()),
              static_cast<std::streamsize>(table.ps.size() * sizeof(double)));
    if (!out) throw validation_error("short write to " + path);
}

LookupTable load_table_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    std::uint32_t version = 0;
    read_pod(in, version);
    if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kFormatVersion)
        throw validation_error(path + " is not a lookup table file");
    std::uint64_t n = 0;
    LookupTable t;
    read_pod(in, n);
    read_pod(in, t.x_s);
    read_pod(in, t.x_f);
    std::uint8_t has_cap = 0;
    double cap = 0.0;
    read_pod(in, has_cap);
    read_pod(in, cap);
    if (has_cap) t.zeta_cap = cap;
    std::uint32_t tag = 0;
    read_pod(in, tag);
    if (tag > static_cast<std::uint32_t>(Builder::DS3))
        throw validation_error(path + ": unknown builder tag");
    t.built_by = static_cast<Builder>(tag);
    t.xs.resize(n);
    t.ps.resize(n);
    in.read(reinterpret_cast<char*>(t.xs.data()), static_cast<std::streamsize>(n * sizeof(double)));
    in.read(reinterpret_cast<char*>(t.ps.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw validation_error(path + " is truncated");
    return t;
}

void save_table_csv(const LookupTable& table, const std::string& path) {
    std::FILE* out = std::fopen(path.c_str(), "w");
    if (!out) throw validation_error("cannot open " + path + " for writing");
    std::fprintf(out, "# smilegrid table,N=%zu,x_s=%.17g,x_f=%.17g,zeta=%.17g,builder=%s\n",
                 table.size(), table.x_s, table.x_f, table.zeta_cap.value_or(0.0),
                 builder_name(table.built_by));
    std::fprintf(out, "x,p\n");
    for (std::size_t i = 0; i < table.size(); ++i)
        std::fprintf(out, "%.17g,%.17g\n", table.xs[i], table.ps[i]);
    std::fclose(out);
}

LookupTable load_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open " + path);
    LookupTable t;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# smilegrid table", 0) != 0)
        throw validation_error(path + " is not a lookup table CSV");
    {
        double zeta = 0.0;
        char builder[16] = {0};
        std::size_t n = 0;
        if (std::sscanf(line.c_str(), "# smilegrid table,N=%zu,x_s=%lg,x_f=%lg,zeta=%lg,builder=%15s",
                        &n, &t.x_s, &t.x_f, &zeta, builder) == 5) {
            if (zeta > 0.0) t.zeta_cap = zeta;
            if (auto b = builder_from_name(builder)) t.built_by = *b;
        }
    }
    std::getline(in, line); // column header
    double x, p;
    while (std::getline(in, line))
        if (std::sscanf(line.c_str(), "%lg,%lg", &x, &p) == 2) {
            t.xs.push_back(x);
            t.ps.push_back(p);
        }
    t.validate();
    return t;
}

} // namespace smilegrid
