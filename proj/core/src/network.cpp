#include "hieraf/network.hpp"

namespace hieraf {

template class Mlp<float>;
template class Mlp<double>;

}  // namespace hieraf
