"""Integer and modular arithmetic used throughout the package.

Everything here works on plain Python ints.  Conductors in the Cremona
tables are small (well below 10**6), so trial division is all the
factoring machinery we need; Miller-Rabin is only used to certify a
leftover cofactor.
"""

from math import gcd, isqrt

# Deterministic Miller-Rabin witnesses, valid for n < 3.3 * 10**24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n):
    """Deterministic primality test for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factor(n):
    """Return the factorization of ``n`` as a sorted list of (prime, exponent)."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    result = []
    for p in (2, 3):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            result.append((p, e))
    p = 5
    while p * p <= n:
        for q in (p, p + 2):
            e = 0
            while n % q == 0:
                n //= q
                e += 1
            if e:
                result.append((q, e))
        p += 6
        # a large prime cofactor ends the search early
        if p > 1000 and is_prime(n):
            break
    if n > 1:
        if not is_prime(n):
            raise ArithmeticError(f"trial division left composite cofactor {n}")
        result.append((n, 1))
    return result


def prime_divisors(n):
    return [p for p, _ in factor(n)]


def euler_phi(n):
    """Euler's totient function."""
    if n < 1:
        raise ValueError("euler_phi needs n >= 1")
    result = n
    for p, _ in factor(n):
        result = result // p * (p - 1)
    return result


def dedekind_nu(n):
    """n * prod_{p | n} (1 + 1/p); the index of Gamma_0(n) in SL_2(Z)."""
    if n < 1:
        raise ValueError("dedekind_nu needs n >= 1")
    result = n
    for p, _ in factor(n):
        result = result // p * (p + 1)
    return result


def divisors(n):
    """Ascending list of the positive divisors of ``n``."""
    divs = [1]
    for p, e in factor(n):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def primes_up_to(n):
    """Sieve of Eratosthenes, returns a list of the primes <= n."""
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(range(p * p, n + 1, p)))
    return [i for i in range(n + 1) if sieve[i]]


def multiplicative_order(a, n):
    """Order of ``a`` in (Z/nZ)^*."""
    if gcd(a, n) != 1:
        raise ValueError(f"{a} is not a unit mod {n}")
    a %= n
    if n == 1:
        return 1
    order = euler_phi(n)
    for p, _ in factor(order):
        while order % p == 0 and pow(a, order // p, n) == 1:
            order //= p
    return order


def crt(residues, moduli):
    """Chinese remainder theorem for pairwise coprime moduli."""
    x, m = 0, 1
    for r, q in zip(residues, moduli):
        # solve x + m*t = r (mod q)
        t = (r - x) * pow(m, -1, q) % q
        x += m * t
        m *= q
    return x % m


def _local_generators(p, e):
    """Generators of (Z/p^e)^* as residues mod p^e."""
    q = p**e
    if p == 2:
        if e == 1:
            return []
        if e == 2:
            return [3]
        return [q - 1, 5]
    phi = q // p * (p - 1)
    for g in range(2, q):
        if g % p and multiplicative_order(g, q) == phi:
            return [g]
    raise ArithmeticError(f"no primitive root mod {q}")


def unit_group_generators(N):
    """Generators of (Z/NZ)^*, one per cyclic prime-power component.

    Each local generator is lifted by CRT to be 1 at the other prime powers,
    so the list has at most (number of prime powers dividing N) + 1 entries.
    """
    if N < 2:
        raise ValueError("unit_group_generators needs N >= 2")
    parts = [(p, e, p**e) for p, e in factor(N)]
    gens = []
    for i, (p, e, q) in enumerate(parts):
        others = [r for j, (_, _, r) in enumerate(parts) if j != i]
        for g in _local_generators(p, e):
            gens.append(crt([g] + [1] * len(others), [q] + others))
    return gens


def subgroup_closure(gens, N):
    """All elements of the subgroup of (Z/NZ)^* generated by ``gens``."""
    elements = {1 % N}
    frontier = [1 % N]
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = x * g % N
            if y not in elements:
                elements.add(y)
                frontier.append(y)
    return elements
