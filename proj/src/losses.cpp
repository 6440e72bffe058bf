#include "cupid/losses.hpp"

namespace cupid {

namespace {

void check_rows(const char* who, const Tensor& a, const Tensor& b) {
    if (!a.is_matrix() || !b.is_matrix() || a.shape() != b.shape()) {
        throw ShapeError(std::string(who) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Tensor alea_loss(Tape& tape, const Tensor& y, const Tensor& y_prime,
                 const Tensor& s) {
    check_rows("alea_loss", y, y_prime);
    if (s.shape() != y.shape()) {
        throw ShapeError("alea_loss: s " + shape_str(s.shape()) +
                         " does not match targets " + shape_str(y.shape()));
    }
    std::size_t n = y.rows();
    Tensor diff = tape.sub(y, y_prime);
    Tensor weighted = tape.mul(tape.exp(tape.scale(s, -1.0)), tape.mul(diff, diff));
    return tape.scale(tape.add(tape.sum(weighted), tape.sum(s)),
                      0.5 / static_cast<double>(n));
}

Tensor epis_loss(Tape& tape, const Tensor& y_hat, const Tensor& y_hat_prime,
                 const Tensor& m, const Tensor& m_prime, double lambda1,
                 bool no_max) {
    check_rows("epis_loss", y_hat, y_hat_prime);
    check_rows("epis_loss", m, m_prime);
    if (y_hat.rows() != m.rows()) {
        throw ShapeError("epis_loss: " + std::to_string(y_hat.rows()) +
                         " predictions vs " + std::to_string(m.rows()) +
                         " features");
    }
    std::size_t n = y_hat.rows();
    Tensor consistency = tape.l1_norm(tape.sub(y_hat, y_hat_prime));
    if (no_max) {
        return tape.scale(consistency, 1.0 / static_cast<double>(n));
    }
    Tensor deviation = tape.l1_norm(tape.sub(m_prime, m));
    return tape.scale(tape.sub(consistency, tape.scale(deviation, lambda1)),
                      1.0 / static_cast<double>(n));
}

Tensor total_loss(Tape& tape, const Tensor& epis, const Tensor& alea,
                  double lambda2) {
    if (!epis.is_scalar() || !alea.is_scalar()) {
        throw ShapeError("total_loss: wants scalar losses, got " +
                         shape_str(epis.shape()) + " and " +
                         shape_str(alea.shape()));
    }
    return tape.add(epis, tape.scale(alea, lambda2));
}

}  // namespace cupid
