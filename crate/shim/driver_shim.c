/* Case-file driver for one candidate kernel.
 *
 *   kernel <case.in> <case.out>
 *
 * Build together with the candidate:
 *   cc -DKGAU_ENTRY=GPTBLAS_daxpy -DKGAU_ROUTINE_ID=2 [-DKGAU_INT="long long"] \
 *      candidate.c support.c driver_shim.c -o kernel -lm
 *
 * Exit status: 0 done, 2 malformed case file or i/o failure, 3 routine id
 * unknown or not the one this binary was built for.
 */
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#ifndef KGAU_INT
#define KGAU_INT int
#endif
#ifndef KGAU_ENTRY
#error "define KGAU_ENTRY to the kernel symbol"
#endif
#ifndef KGAU_ROUTINE_ID
#error "define KGAU_ROUTINE_ID"
#endif

typedef KGAU_INT kint;
typedef void *P;

void KGAU_ENTRY(void);

#define HEADER_LEN 56
#define MAX_ARGS 13

/* Argument codes, in signature order:
 *   T trans/transa  B transb  S side  U uplo  D diag
 *   m n k dimensions, i j incx/incy, a b c lda/ldb/ldc
 *   p alpha, q beta, r c, s s
 *   x X vector x (in/inout), y Y vector y, A E matrix a,
 *   G H matrix b, C matrix c (inout), h drotm parameters
 */
static const struct {
    const char *name;
    const char *sig;
    char ret;
} table[] = {
    {"dasum", "nxi", 'd'},
    {"daxpy", "npxiYj", 'v'},
    {"ddot", "nxiyj", 'd'},
    {"idamax", "nxi", 'i'},
    {"dnrm2", "nxi", 'd'},
    {"drot", "nXiYjrs", 'v'},
    {"drotm", "nXiYjh", 'v'},
    {"dgemv", "TmnpAaxiqYj", 'v'},
    {"dger", "mnpxiyjEa", 'v'},
    {"dsymv", "UnpAaxiqYj", 'v'},
    {"dsyr", "UnpxiEa", 'v'},
    {"dsyr2", "UnpxiyjEa", 'v'},
    {"dtrmv", "UTDnAaXi", 'v'},
    {"dtrsv", "UTDnAaXi", 'v'},
    {"dgemm", "TBmnkpAaGbqCc", 'v'},
    {"dsymm", "SUmnpAaGbqCc", 'v'},
    {"dsyrk", "UTnkpAaqCc", 'v'},
    {"dsyr2k", "UTnkpAaGbqCc", 'v'},
    {"dtrmm", "SUTDmnpAaHb", 'v'},
    {"dtrsm", "SUTDmnpAaHb", 'v'},
};

#define NROUTINES ((int)(sizeof table / sizeof table[0]))

struct header {
    int id;
    int64_t m, n, k, incx, incy;
    unsigned char chars[4];
};

static int64_t clamp0(int64_t v) { return v < 0 ? 0 : v; }

static size_t vec_storage(int64_t n, int64_t inc)
{
    uint64_t step = (uint64_t)(inc < 0 ? -inc : inc);
    if (step == 0)
        step = 1;
    size_t len = n <= 0 ? 0 : 1 + (size_t)(n - 1) * step;
    return len ? len : 1;
}

static int is_trans(unsigned char c) { return c == 'T' || c == 't' || c == 'C' || c == 'c'; }

/* Logical shape of a matrix operand. */
static void mat_dims(const struct header *h, const char *name, char which, int64_t *rows, int64_t *cols)
{
    int64_t m = clamp0(h->m), n = clamp0(h->n), k = clamp0(h->k);
    int ta = is_trans(h->chars[0]);
    int64_t ka = (h->chars[1] == 'R' || h->chars[1] == 'r') ? n : m;
    *rows = *cols = 0;
    if (!strcmp(name, "dgemv") || !strcmp(name, "dger")) {
        *rows = m; *cols = n;
    } else if (!strcmp(name, "dsymv") || !strcmp(name, "dsyr") || !strcmp(name, "dsyr2") ||
               !strcmp(name, "dtrmv") || !strcmp(name, "dtrsv")) {
        *rows = n; *cols = n;
    } else if (!strcmp(name, "dgemm")) {
        if (which == 'a') { *rows = ta ? k : m; *cols = ta ? m : k; }
        else if (which == 'b') { int tb = is_trans(h->chars[1]); *rows = tb ? n : k; *cols = tb ? k : n; }
        else { *rows = m; *cols = n; }
    } else if (!strcmp(name, "dsymm") || !strcmp(name, "dtrmm") || !strcmp(name, "dtrsm")) {
        if (which == 'a') { *rows = ka; *cols = ka; }
        else { *rows = m; *cols = n; }
    } else if (!strcmp(name, "dsyrk") || !strcmp(name, "dsyr2k")) {
        if (which == 'c') { *rows = n; *cols = n; }
        else { *rows = ta ? k : n; *cols = ta ? n : k; }
    }
}

static size_t mat_storage(const struct header *h, const char *name, char which, int64_t *ld)
{
    int64_t rows, cols;
    mat_dims(h, name, which, &rows, &cols);
    *ld = rows > 1 ? rows : 1;
    size_t len = (size_t)(*ld) * (size_t)cols;
    return len ? len : 1;
}

static int64_t vec_len(const struct header *h, const char *name, char which)
{
    int64_t m = clamp0(h->m), n = clamp0(h->n);
    if (!strcmp(name, "dgemv")) {
        int t = is_trans(h->chars[0]);
        return which == 'x' ? (t ? m : n) : (t ? n : m);
    }
    if (!strcmp(name, "dger") && which == 'x')
        return m;
    return n;
}

static int64_t get_i64(const unsigned char *b) { int64_t v; memcpy(&v, b, 8); return v; }
static uint32_t get_u32(const unsigned char *b) { uint32_t v; memcpy(&v, b, 4); return v; }

static unsigned char *slurp(const char *path, size_t *len)
{
    FILE *f = fopen(path, "rb");
    if (!f)
        return NULL;
    size_t cap = 1 << 16, n = 0;
    unsigned char *buf = malloc(cap);
    size_t got;
    while (buf && (got = fread(buf + n, 1, cap - n, f)) > 0) {
        n += got;
        if (n == cap) {
            cap *= 2;
            buf = realloc(buf, cap);
        }
    }
    fclose(f);
    *len = n;
    return buf;
}

static void call(const char *sig, char ret, P *a, double *dret, kint *iret)
{
    /* through a variable, so the compiler does not see the original type */
    void (*volatile entry)(void) = KGAU_ENTRY;
    int n = (int)strlen(sig);
#define PARAMS3 P, P, P
#define PARAMS5 PARAMS3, P, P
#define PARAMS6 PARAMS5, P
#define PARAMS7 PARAMS6, P
#define PARAMS8 PARAMS7, P
#define PARAMS9 PARAMS8, P
#define PARAMS10 PARAMS9, P
#define PARAMS11 PARAMS10, P
#define PARAMS12 PARAMS11, P
#define PARAMS13 PARAMS12, P
#define ARGS3 a[0], a[1], a[2]
#define ARGS5 ARGS3, a[3], a[4]
#define ARGS6 ARGS5, a[5]
#define ARGS7 ARGS6, a[6]
#define ARGS8 ARGS7, a[7]
#define ARGS9 ARGS8, a[8]
#define ARGS10 ARGS9, a[9]
#define ARGS11 ARGS10, a[10]
#define ARGS12 ARGS11, a[11]
#define ARGS13 ARGS12, a[12]
#define CASE(N)                                                           \
    case N:                                                               \
        if (ret == 'd')                                                   \
            *dret = ((double (*)(PARAMS##N))entry)(ARGS##N);      \
        else if (ret == 'i')                                              \
            *iret = ((kint (*)(PARAMS##N))entry)(ARGS##N);        \
        else                                                              \
            ((void (*)(PARAMS##N))entry)(ARGS##N);                \
        break;
    switch (n) {
        CASE(3) CASE(5) CASE(6) CASE(7) CASE(8) CASE(9) CASE(10) CASE(11) CASE(12) CASE(13)
    default:
        exit(2);
    }
}

int main(int argc, char **argv)
{
    if (argc != 3)
        return 2;
    size_t len;
    unsigned char *in = slurp(argv[1], &len);
    if (!in || len < HEADER_LEN || memcmp(in, "KGAU", 4) != 0 || get_u32(in + 4) != 1)
        return 2;
    struct header h;
    uint32_t id = get_u32(in + 8);
    if (id < 1 || id > (uint32_t)NROUTINES || id != KGAU_ROUTINE_ID)
        return 3;
    h.id = (int)id;
    h.m = get_i64(in + 12);
    h.n = get_i64(in + 20);
    h.k = get_i64(in + 28);
    h.incx = get_i64(in + 36);
    h.incy = get_i64(in + 44);
    memcpy(h.chars, in + 52, 4);
    const char *name = table[id - 1].name, *sig = table[id - 1].sig;
    char ret = table[id - 1].ret;

    P args[MAX_ARGS];
    char opt[4][2];
    kint ints[MAX_ARGS];
    double scal[MAX_ARGS];
    double *arrays[MAX_ARGS] = {0};
    size_t lens[MAX_ARGS] = {0};
    size_t pos = HEADER_LEN;
    int64_t lda = 1, ldb = 1, ldc = 1;

    for (int i = 0; sig[i]; i++) {
        char c = sig[i];
        size_t need = 0;
        switch (c) {
        case 'T': case 'B': case 'S': case 'U': case 'D': {
            int slot = c == 'T' ? 0 : (c == 'B' || c == 'S') ? 1 : c == 'U' ? 2 : 3;
            opt[slot][0] = (char)h.chars[slot];
            opt[slot][1] = 0;
            args[i] = opt[slot];
            continue;
        }
        case 'm': ints[i] = (kint)h.m; break;
        case 'n': ints[i] = (kint)h.n; break;
        case 'k': ints[i] = (kint)h.k; break;
        case 'i': ints[i] = (kint)h.incx; break;
        case 'j': ints[i] = (kint)h.incy; break;
        case 'p': case 'q': case 'r': case 's': need = 1; break;
        case 'x': case 'X': need = vec_storage(vec_len(&h, name, 'x'), h.incx); break;
        case 'y': case 'Y': need = vec_storage(vec_len(&h, name, 'y'), h.incy); break;
        case 'A': case 'E': need = mat_storage(&h, name, 'a', &lda); break;
        case 'G': case 'H': need = mat_storage(&h, name, 'b', &ldb); break;
        case 'C': need = mat_storage(&h, name, 'c', &ldc); break;
        case 'h': need = 5; break;
        }
        if (c == 'm' || c == 'n' || c == 'k' || c == 'i' || c == 'j') {
            args[i] = &ints[i];
            continue;
        }
        if (c == 'a' || c == 'b' || c == 'c')
            continue; /* filled once the matrices are sized */
        if (pos + need * 8 > len)
            return 2;
        if (need == 1 && (c == 'p' || c == 'q' || c == 'r' || c == 's')) {
            memcpy(&scal[i], in + pos, 8);
            args[i] = &scal[i];
        } else {
            arrays[i] = malloc(need * 8);
            if (!arrays[i])
                return 2;
            memcpy(arrays[i], in + pos, need * 8);
            lens[i] = need;
            args[i] = arrays[i];
        }
        pos += need * 8;
    }
    if (pos != len)
        return 2;
    for (int i = 0; sig[i]; i++) {
        char c = sig[i];
        if (c == 'a' || c == 'b' || c == 'c') {
            ints[i] = (kint)(c == 'a' ? lda : c == 'b' ? ldb : ldc);
            args[i] = &ints[i];
        }
    }

    double dret = 0.0;
    kint iret = 0;
    call(sig, ret, args, &dret, &iret);
    fflush(NULL);

    FILE *out = fopen(argv[2], "wb");
    if (!out)
        return 2;
    fwrite(in, 1, HEADER_LEN, out);
    if (ret != 'v') {
        double r = ret == 'd' ? dret : (double)iret;
        fwrite(&r, 8, 1, out);
    }
    for (int i = 0; sig[i]; i++)
        if (strchr("XYEHC", sig[i]))
            fwrite(arrays[i], 8, lens[i], out);
    if (fclose(out) != 0)
        return 2;
    return 0;
}
