#include "hieropo/parallel.hpp"

#include <omp.h>

namespace hieropo {

namespace {
int default_threads = 0;
}

void set_num_threads(int n)
{
    if (default_threads == 0)
        default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : default_threads);
}

int num_threads() { return omp_get_max_threads(); }

} // namespace hieropo
