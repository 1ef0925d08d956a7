#include "segdms/edit_distance.hpp"

#include <algorithm>
#include <vector>

#include "segdms/errors.hpp"

namespace segdms {

int edit_distance(const Sequence& a, const Sequence& b) {
    if (!a.same_vocab(b)) {
        throw DataError("edit_distance: sequences bound to different vocabularies");
    }
    const std::vector<int>& x = a.ids();
    const std::vector<int>& y = b.ids();

    // single-row DP over the shorter side
    const std::vector<int>& s = x.size() <= y.size() ? x : y;
    const std::vector<int>& t = x.size() <= y.size() ? y : x;

    std::vector<int> row(s.size() + 1);
    for (std::size_t j = 0; j <= s.size(); ++j) row[j] = static_cast<int>(j);

    for (std::size_t i = 1; i <= t.size(); ++i) {
        int diag = row[0];
        row[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= s.size(); ++j) {
            int up = row[j];
            if (t[i - 1] == s[j - 1]) {
                row[j] = diag;
            } else {
                row[j] = 1 + std::min({diag, up, row[j - 1]});
            }
            diag = up;
        }
    }
    return row[s.size()];
}

}  // namespace segdms
