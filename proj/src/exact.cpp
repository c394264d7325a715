#include "brw/exact.hpp"

#include <sstream>

namespace brw {

std::string table_to_csv(const TailTable& table) {
    std::ostringstream out;
    out << "k,x,w,u\n";
    for (int k = 0; k <= table.k_max; ++k)
        for (int x = 1; x <= table.x_max; ++x) {
            const double w = table.at(k, x);
            out << k << ',' << x << ',' << fmt17(w) << ','
                << fmt17(u_from_w(w, table.params.n)) << '\n';
        }
    return out.str();
}

std::string fixed_point_to_csv(const TailFixedPoint& fp) {
    std::ostringstream out;
    out << "x,w,u\n";
    for (int x = 1; x <= fp.x_max; ++x) {
        const double w = fp.at(x);
        out << x << ',' << fmt17(w) << ',' << fmt17(u_from_w(w, fp.params.n))
            << '\n';
    }
    return out.str();
}

}  // namespace brw
