"""Table rows transcribed independently of the catalog: (letters, p, n_f, Err, Eff, id)."""

TABLE = [
    ('BAB', 2, 1, '0.0932', '10.73', 1),
    ('ABA', 2, 1, '0.0932', '10.73', 2),
    ('DAD', 2, 2, '0.0833', '3.00', 3),
    ('ADA', 2, 2, '0.0417', '6.00', 4),
    ('BABAB', 2, 2, '0.00855', '29.24', 5),
    ('ABABA', 2, 2, '0.00855', '29.24', 6),
    ('BADAB', 4, 3, '0.000728', '16.96', 8),
    ('DABAD', 4, 3, '0.00335', '3.68', 7),
    ('DADAD', 4, 4, '0.000625', '6.25', 9),
    ('ADADA', 4, 4, '0.000718', '5.44', 10),
    ('ABABABA', 4, 3, '0.0283', '0.44', 12),
    ('BABABAB', 4, 3, '0.0383', '0.32', 11),
    ('ABADABA', 4, 4, '0.000149', '26.19', 14),
    ('DABABAD', 4, 4, '0.000891', '4.38', 13),
    ('BADADAB', 4, 5, '0.0000498', '32.12', 15),
    ('ADABADA', 4, 5, '0.0000844', '18.95', 16),
    ('ADADADA', 4, 6, '0.0000200', '38.57', 18),
    ('DADADAD', 4, 6, '0.0000275', '28.09', 17),
    ('ABABABABA', 4, 4, '0.000610', '6.40', 20),
    ('BABABABAB', 4, 4, '0.000654', '5.97', 19),
    ('BABADABAB', 4, 5, '0.0000651', '24.57', 21),
    ('DABABABAD', 4, 5, '0.000336', '4.76', 22),
    ('BADABADAB', 4, 6, '0.0000105', '73.45', 24),
    ('DABADABAD', 4, 6, '0.0000130', '59.33', 23),
    ('ABADADABA', 4, 6, '0.0000346', '22.32', 25),
    ('ADABABADA', 4, 6, '0.0000471', '16.39', 26),
    ('DADABADAD', 4, 7, '0.0000101', '41.06', 27),
    ('ADADADADA', 4, 8, '0.00000501', '48.71', 29),
    ('BADADADAB', 6, 7, '0.00154', '0.0055', 28),
    ('BABABABABAB', 4, 5, '0.0000270', '59.26', 30),
    ('ABABABABABA', 4, 5, '0.0000518', '30.89', 31),
    ('ABABADABABA', 4, 6, '0.0000154', '50.09', 33),
    ('DABABABABAD', 4, 6, '0.0000166', '46.47', 32),
    ('ABADABADABA', 4, 7, '0.00000445', '93.60', 36),
    ('BADABABADAB', 4, 7, '0.00000520', '80.13', 34),
    ('ADABABABADA', 4, 7, '0.0000128', '32.64', 37),
    ('BABADADABAB', 4, 7, '0.0000189', '21.98', 35),
    ('ADABADABADA', 4, 8, '0.00000318', '76.79', 40),
    ('DABADADABAD', 4, 8, '0.00000355', '68.84', 38),
    ('DADABABADAD', 4, 8, '0.00000519', '47.08', 39),
    ('ADADABADADA', 4, 9, '0.00000235', '64.99', 43),
    ('BADADADADAB', 6, 9, '0.00000699', '0.27', 42),
    ('ADADADADADA', 6, 10, '0.00000603', '0.17', 45),
]
