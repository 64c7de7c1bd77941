#include "smilegrid/synthetic.hpp"

#include "smilegrid/rng.hpp"

namespace smilegrid {

std::vector<SyntheticSmile> synthetic_smiles(std::size_t count, std::uint64_t seed) {
    const CounterRng rng(seed);
    std::vector<SyntheticSmile> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const CounterRng sub = rng.substream(i);
        SyntheticSmile s;
        s.alpha_true = 0.1 + 0.9 * sub.uniform(0);
        s.rho_true = -0.7 + 1.4 * sub.uniform(1);
        const double atm = 0.1 + 0.4 * sub.uniform(2);
        const double expiry = 0.5 + 4.5 * sub.uniform(3);

        MarketSmile& smile = s.smile;
        smile.f0 = 100.0;
        smile.k_minus = 80.0;
        smile.k_atm = smile.f0;
        smile.k_plus = 125.0;
        smile.beta = 0.5;
        smile.expiry = expiry;
        smile.vol_atm = atm;

        s.s0_true = calibrate_s0(s.alpha_true, s.rho_true, smile);
        SabrParams p{s.alpha_true, smile.beta, s.rho_true, s.s0_true, smile.f0, smile.expiry};
        smile.vol_minus = implied_vol(p, smile.k_minus);
        smile.vol_plus = implied_vol(p, smile.k_plus);
        smile.validate();
        out.push_back(s);
    }
    return out;
}

} // namespace smilegrid
